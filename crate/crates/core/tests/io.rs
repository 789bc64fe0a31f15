use gpargmax::diagnostics::{discontinuity_experiment, AtomLevel, AtomProfile};
use gpargmax::io::{
    read_ks, read_law, read_law_with_sidecar, read_table, write_atom_profiles, write_discontinuity, write_ks,
    write_law, write_law_with_sidecar, write_representation, write_sampling_laws, KsRow, LawSidecar, ATOM_COLUMNS,
    DISCONTINUITY_COLUMNS, RKHS_COLUMNS,
};
use gpargmax::rkhs::{verify_cov_representation, ModelSpace, QuadratureSpec};
use gpargmax::simulate::{build_lattice, mc_argmax, McOptions};
use gpargmax::{CovSpec, EmpiricalLaw, Execution, MeanSpec, MixtureAtom, RngPolicy};
use proptest::prelude::*;

fn law_strategy() -> impl Strategy<Value = EmpiricalLaw> {
    (1usize..=3).prop_flat_map(|d| {
        prop::collection::vec(
            (
                prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), d),
                any::<f64>().prop_filter("finite", |v| v.is_finite()),
                any::<bool>(),
            ),
            1..30,
        )
        .prop_map(move |rows| {
            let draws = rows.iter().flat_map(|r| r.0.clone()).collect();
            let values = rows.iter().map(|r| r.1).collect();
            let bnd = rows.iter().map(|r| r.2).collect();
            EmpiricalLaw::new(d, draws, values, bnd, 17).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn draw_tables_roundtrip_bit_for_bit(law in law_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("draws.csv");
        write_law(&path, &law).unwrap();
        prop_assert_eq!(read_law(&path, law.master_seed).unwrap(), law);
    }
}

#[test]
fn identical_runs_write_identical_bytes() {
    let k = CovSpec::ScaledBm1d { sigma2: 1.0 };
    let m = MeanSpec::PowerMean { c: 1.0, gamma: 2.0 };
    let lat = build_lattice(1, 3.0, 20).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for (i, execution) in [Execution::Sequential, Execution::Parallel].into_iter().enumerate() {
        let law =
            mc_argmax(&k, &m, &lat, 500, RngPolicy::new(8), McOptions { execution, ..Default::default() }).unwrap();
        let path = dir.path().join(format!("run{i}.csv"));
        write_law(&path, &law).unwrap();
        bytes.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn sidecar_carries_provenance() {
    let law = EmpiricalLaw::from_points(1, vec![0.5, -0.25, 0.0], 42).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("law.csv");
    let meta = LawSidecar::for_law(&law, "abc123", serde_json::json!({ "extent": 4.0, "ppu": 50 }));
    write_law_with_sidecar(&path, &law, &meta).unwrap();
    assert!(dir.path().join("law.json").exists());
    let (back, m) = read_law_with_sidecar(&path).unwrap();
    assert_eq!(back, law);
    assert_eq!(m.config_hash, "abc123");
    assert_eq!(m.master_seed, 42);
}

#[test]
fn tables_carry_their_documented_headers() {
    let dir = tempfile::tempdir().unwrap();
    let atoms = dir.path().join("atoms.csv");
    let profile = AtomProfile {
        coordinate: 0,
        location: 0.0,
        levels: vec![AtomLevel { ppu: 25, h: 0.04, mass: 0.03, stderr: 0.001, replications: 100 }],
    };
    write_atom_profiles(&atoms, &[profile]).unwrap();
    assert_eq!(read_table(&atoms, ATOM_COLUMNS).unwrap().len(), 1);

    let disc = dir.path().join("discontinuity.csv");
    let report =
        discontinuity_experiment(0.25, 1.0, 1.0, 2.0, 100, 100, RngPolicy::new(1), Execution::Parallel).unwrap();
    write_discontinuity(&disc, &report).unwrap();
    let rows = read_table(&disc, DISCONTINUITY_COLUMNS).unwrap();
    let names: Vec<&str> = rows.iter().map(|r| r.get(0).unwrap()).collect();
    assert_eq!(names, ["p_neg", "p_zero", "p_pos", "sup_quantile_check"]);

    let ks = dir.path().join("ks.csv");
    let rows = vec![KsRow { n: 500, ks: 0.04, replications: 2000 }, KsRow { n: 2000, ks: 0.03, replications: 2000 }];
    write_ks(&ks, &rows).unwrap();
    assert_eq!(read_ks(&ks).unwrap(), rows);

    let rkhs = dir.path().join("rkhs.csv");
    let ms = ModelSpace::maxscore(vec![MixtureAtom::new(1.0, vec![1.0, 1.0], 1.0)], 1.0);
    let rep =
        verify_cov_representation(&ms, &[(vec![0.5, 0.5], vec![1.0, -1.0])], QuadratureSpec::default(), 1e-8).unwrap();
    write_representation(&rkhs, &rep).unwrap();
    let rows = read_table(&rkhs, RKHS_COLUMNS).unwrap();
    assert_eq!(rows[0].get(0), Some("0.5;0.5"));

    let laws = dir.path().join("laws.csv");
    let a = EmpiricalLaw::from_points(1, vec![0.1, 0.2], 1).unwrap();
    write_sampling_laws(&laws, &[(500, &a), (2000, &a)]).unwrap();
    let text = std::fs::read_to_string(&laws).unwrap();
    assert!(text.starts_with("n,rep,s1,value,on_boundary\n500,0,0.1,0,false\n"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn missing_columns_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("atoms.csv");
    std::fs::write(&path, "coordinate,location,ppu,h,stderr,replications\n").unwrap();
    let err = read_table(&path, ATOM_COLUMNS).unwrap_err().to_string();
    assert!(err.contains("`mass`"), "{err}");
}
