use std::path::Path;

use anyhow::{Context as _, Result};
use gpargmax::diagnostics::{
    atom_mass, calibrate_c, continuity_profile, discontinuity_experiment, max_marginal_jump, AtomProfile,
    DiscontinuityReport,
};
use gpargmax::estimators::oracle::{brute_force_erm, brute_force_maxscore, brute_force_threshreg};
use gpargmax::estimators::{
    coverage_experiment, fit_erm, fit_maxscore, fit_threshreg, limit_specs, percentile_interval, percentile_quantile,
    sampling_law, DgpSpec, PercentileQuery, ThetaGrid,
};
use gpargmax::io::{self, KsRow, LawSidecar};
use gpargmax::kernels::{check_mean_tail, check_self_similarity, check_shift_equivariance};
use gpargmax::rkhs::{
    erm_cross_term, l2_norm_l, verify_cov_representation, verify_mean_representation, ModelSpace, RepresentationReport,
    Verdict,
};
use gpargmax::simulate::{
    boundary_guard, build_lattice, ecdf_eval, gaussian_argmax_law, ks_distance, mc_argmax, KsTarget, McOptions,
    SamplerKind,
};
use gpargmax::{CovSpec, EmpiricalLaw, Execution, Lattice, MeanSpec, MixtureAtom, RngPolicy};
use rand::Rng;
use rand::RngCore;
use serde_json::json;

use crate::config::{
    CheckKernel, CiExperiment, Continuity, ContinuityCheck, Discontinuity, EstimatorMc, Experiment, FamilyKind,
    RkhsVerify, Simulate,
};
use crate::report::{Check, Outcome, Status};

/// Boundary fractions above these warn or abort.
const BOUNDARY_WARN: f64 = 0.01;
const BOUNDARY_FAIL: f64 = 0.05;

pub struct Context<'a> {
    pub dir: &'a Path,
    pub config_hash: &'a str,
    pub rngp: RngPolicy,
    pub sampler: SamplerKind,
    pub execution: Execution,
    pub tolerance_scale: f64,
}

impl Context<'_> {
    fn opts(&self) -> McOptions {
        McOptions { sampler: self.sampler, execution: self.execution }
    }

    fn tol(&self, t: f64) -> f64 {
        t * self.tolerance_scale
    }

    fn write_law(&self, name: &str, law: &EmpiricalLaw, lattice: &Lattice) -> Result<()> {
        let meta = LawSidecar::for_law(law, self.config_hash, serde_json::to_value(lattice.spec())?);
        io::write_law_with_sidecar(&self.dir.join(name), law, &meta).with_context(|| format!("writing {name}"))
    }

    fn mc(
        &self,
        k: &CovSpec,
        m: &MeanSpec,
        lat: &Lattice,
        reps: u64,
        rngp: RngPolicy,
        out: &mut Outcome,
    ) -> Result<EmpiricalLaw> {
        let law = mc_argmax(k, m, lat, reps, rngp, self.opts())?;
        if let Some(w) = boundary_guard(&law, BOUNDARY_WARN, BOUNDARY_FAIL)? {
            out.warnings.push(w);
        }
        Ok(law)
    }
}

pub fn run(exp: &Experiment, ctx: &Context<'_>) -> Result<Outcome> {
    match exp {
        Experiment::CheckKernel(c) => check_kernel(c, ctx),
        Experiment::Simulate(s) => simulate(s, ctx),
        Experiment::Continuity(c) => continuity(c, ctx),
        Experiment::DiscontinuityExample(d) => discontinuity(d, ctx),
        Experiment::RkhsVerify(r) => rkhs_verify(r, ctx),
        Experiment::EstimatorMc(e) => estimator_mc(e, ctx),
        Experiment::CiExperiment(c) => ci_experiment(c, ctx),
    }
}

fn uniform_vec<R: Rng + ?Sized>(rng: &mut R, d: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(lo..hi)).collect()
}

fn kind_name<T: serde::Serialize>(spec: &T) -> String {
    serde_json::to_value(spec)
        .ok()
        .and_then(|v| v.get("kind").and_then(|k| k.as_str()).map(str::to_string))
        .unwrap_or_default()
}

fn tail_directions(d: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..16)
            .map(|i| {
                let a = f64::from(i) * std::f64::consts::PI / 8.0;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            let mut dirs = Vec::new();
            for l in 0..d {
                for sign in [1.0, -1.0] {
                    let mut u = vec![0.0; d];
                    u[l] = sign;
                    dirs.push(u);
                }
            }
            let diag = 1.0 / (d as f64).sqrt();
            dirs.push(vec![diag; d]);
            dirs.push(vec![-diag; d]);
            dirs
        }
    }
}

fn check_kernel(c: &CheckKernel, ctx: &Context<'_>) -> Result<Outcome> {
    let mut out = Outcome::default();
    let tol = ctx.tol(c.tol);
    let mut rows = Vec::new();
    for (i, k) in c.kernels.iter().enumerate() {
        let mut rng = ctx.rngp.child(i as u64).substream(0);
        let d = k.dim();
        let (mut shift, mut selfsim) = (0.0f64, 0.0f64);
        let (mut shift_ok, mut self_ok) = (true, true);
        let w = c.half_width;
        for _ in 0..c.triples {
            let h = uniform_vec(&mut rng, d, -w, w);
            let s = uniform_vec(&mut rng, d, -w, w);
            let t = uniform_vec(&mut rng, d, -w, w);
            let tau = rng.random_range(0.1..10.0);
            let a = check_shift_equivariance(k, &h, &s, &t, tol)?;
            let b = check_self_similarity(k, tau, &s, &t, k.hurst(), tol)?;
            shift = shift.max(a.residual);
            selfsim = selfsim.max(b.residual);
            shift_ok &= a.pass;
            self_ok &= b.pass;
        }
        let kind = kind_name(k);
        for (identity, residual, ok) in [("shift-equivariance", shift, shift_ok), ("self-similarity", selfsim, self_ok)]
        {
            let mut check = Check::at_most(format!("{identity}[{i}:{kind}]"), residual, tol);
            check.status = Status::from_bool(ok);
            check.detail = format!("max residual {residual:e} over {} triples", c.triples);
            out.checks.push(check);
            rows.push(vec![
                i.to_string(),
                kind.clone(),
                identity.to_string(),
                io::fmt_f64(residual),
                io::fmt_f64(tol),
                ok.to_string(),
            ]);
        }
    }
    if !rows.is_empty() {
        io::write_rows(
            &ctx.dir.join("kernel_identities.csv"),
            &["kernel", "kind", "identity", "max_residual", "tol", "pass"],
            rows,
        )?;
    }
    let radii: Vec<f64> = (0..12).map(|i| 2f64.powi(i)).collect();
    let mut rows = Vec::new();
    for (i, case) in c.mean_tails.iter().enumerate() {
        let r = check_mean_tail(&case.mean, case.hurst, case.eps, &radii, &tail_directions(case.mean.dim()))?;
        let ok = r.pass == case.expect_pass;
        let mut check = Check::new(
            format!("mean-tail[{i}:{}]", kind_name(&case.mean)),
            Status::from_bool(ok),
            format!("η={} coercive={} expected={}", r.eta, r.pass, case.expect_pass),
        );
        check.value = Some(r.eta);
        out.checks.push(check);
        rows.push(vec![
            i.to_string(),
            kind_name(&case.mean),
            io::fmt_f64(r.eta),
            r.pass.to_string(),
            case.expect_pass.to_string(),
        ]);
    }
    if !rows.is_empty() {
        io::write_rows(&ctx.dir.join("mean_tails.csv"), &["case", "kind", "eta", "coercive", "expected"], rows)?;
    }
    Ok(out)
}

fn simulate(s: &Simulate, ctx: &Context<'_>) -> Result<Outcome> {
    let mut out = Outcome::default();
    let lat = build_lattice(s.cov.dim(), s.lattice.extent, s.lattice.ppu)?;
    let law = ctx.mc(&s.cov, &s.mean, &lat, s.reps, ctx.rngp.child(0), &mut out)?;
    ctx.write_law("draws.csv", &law, &lat)?;
    out.metric("boundary_fraction", law.boundary_fraction);
    out.metric("lattice_points", lat.len());
    if let Some(cf) = &s.closed_form {
        let closed = gaussian_argmax_law(&cf.gamma, &cf.sigma, s.reps, ctx.rngp.child(1), ctx.execution)?;
        ctx.write_law("closed_form.csv", &closed, &lat)?;
        let ks = ks_distance(&law, KsTarget::Law(&closed))?;
        out.metric("ks_closed_form", ks);
        out.checks.push(Check::at_most("closed-form-ks", ks, ctx.tol(cf.ks_tol)));
    }
    Ok(out)
}

fn continuity(c: &Continuity, ctx: &Context<'_>) -> Result<Outcome> {
    let mut out = Outcome::default();
    let (k, m, d) = (&c.cov, &c.mean, c.cov.dim());
    let mut profiles: Vec<AtomProfile> = Vec::new();
    for (i, check) in c.checks.iter().enumerate() {
        let rngp = ctx.rngp.child(i as u64);
        match check {
            ContinuityCheck::Ecdf { ppu, point, target, tol } => {
                let lat = build_lattice(d, c.extent, *ppu)?;
                let law = ctx.mc(k, m, &lat, c.reps, rngp, &mut out)?;
                ctx.write_law(&format!("draws_{i}_ppu{ppu}.csv"), &law, &lat)?;
                let f = ecdf_eval(&law, point)?;
                out.metric(format!("ecdf[{i}]"), f);
                let mut ch = Check::at_most(format!("ecdf[{i}]"), (f - target).abs(), ctx.tol(*tol));
                ch.detail = format!("F({point:?}) = {f} against {target}");
                out.checks.push(ch);
            }
            ContinuityCheck::Profile { coordinate, location, ppu_levels, ratio_min, ratio_max } => {
                let p =
                    continuity_profile(k, m, *coordinate, *location, c.extent, ppu_levels, c.reps, rngp, ctx.opts())?;
                let ratios = p.ratios();
                let ok = ratios.iter().all(|r| (*ratio_min..=*ratio_max).contains(r));
                out.metric(format!("atom_masses[{i}]"), p.levels.iter().map(|l| l.mass).collect::<Vec<_>>());
                out.metric(format!("atom_ratios[{i}]"), &ratios);
                out.checks.push(Check::new(
                    format!("atom-profile[{i}]"),
                    Status::from_bool(ok),
                    format!("ratios {ratios:?} in [{ratio_min}, {ratio_max}]"),
                ));
                profiles.push(p);
            }
            ContinuityCheck::SeedKs { ppu, tol } => {
                let lat = build_lattice(d, c.extent, *ppu)?;
                let a = ctx.mc(k, m, &lat, c.reps, rngp.child(0), &mut out)?;
                let b = ctx.mc(k, m, &lat, c.reps, rngp.child(1), &mut out)?;
                ctx.write_law(&format!("draws_{i}_a.csv"), &a, &lat)?;
                ctx.write_law(&format!("draws_{i}_b.csv"), &b, &lat)?;
                let ks = ks_distance(&a, KsTarget::Law(&b))?;
                out.metric(format!("seed_ks[{i}]"), ks);
                out.checks.push(Check::at_most(format!("seed-ks[{i}]"), ks, ctx.tol(*tol)));
            }
            ContinuityCheck::MarginalJump { ppu, tol } => {
                let lat = build_lattice(d, c.extent, *ppu)?;
                let law = ctx.mc(k, m, &lat, c.reps, rngp, &mut out)?;
                ctx.write_law(&format!("draws_{i}_ppu{ppu}.csv"), &law, &lat)?;
                for l in 0..d {
                    let (loc, jump) = max_marginal_jump(&law, l)?;
                    out.metric(format!("marginal_jump[{i}].s{}", l + 1), json!({ "location": loc, "mass": jump }));
                    out.checks.push(Check::at_most(format!("marginal-jump[{i}].s{}", l + 1), jump, ctx.tol(*tol)));
                }
            }
            ContinuityCheck::Refinement { ppu_from, ppu_to, max_ratio } => {
                let coarse = build_lattice(d, c.extent, *ppu_from)?;
                let fine = build_lattice(d, c.extent, *ppu_to)?;
                let a = ctx.mc(k, m, &coarse, c.reps, rngp.child(0), &mut out)?;
                let b = ctx.mc(k, m, &fine, c.reps, rngp.child(1), &mut out)?;
                ctx.write_law(&format!("draws_{i}_ppu{ppu_from}.csv"), &a, &coarse)?;
                ctx.write_law(&format!("draws_{i}_ppu{ppu_to}.csv"), &b, &fine)?;
                for l in 0..d {
                    let (loc, _) = max_marginal_jump(&a, l)?;
                    let (ma, _) = atom_mass(&a, l, loc, coarse.spacing())?;
                    let (mb, _) = atom_mass(&b, l, loc, fine.spacing())?;
                    let ratio = if ma > 0.0 { mb / ma } else { f64::INFINITY };
                    out.metric(
                        format!("refinement[{i}].s{}", l + 1),
                        json!({ "location": loc, "coarse": ma, "fine": mb }),
                    );
                    out.checks.push(Check::at_most(format!("refinement-ratio[{i}].s{}", l + 1), ratio, *max_ratio));
                }
            }
        }
    }
    if !profiles.is_empty() {
        io::write_atom_profiles(&ctx.dir.join("atoms.csv"), &profiles)?;
    }
    Ok(out)
}

fn discontinuity_checks(tag: &str, r: &DiscontinuityReport, d: &Discontinuity, out: &mut Outcome) {
    out.checks.push(Check::new(
        format!("partition{tag}"),
        Status::from_bool(r.partition_exact()),
        format!("{} + {} + {} of {}", r.count_neg, r.count_zero, r.count_pos, r.replications),
    ));
    let mut z = Check::at_least(format!("p_zero-positive{tag}"), r.p_zero, d.z_zero * r.se_zero);
    z.status = Status::from_bool(r.zero_detected(d.z_zero));
    out.checks.push(z);
    let mut pos = Check::at_most(format!("p_pos-below-half{tag}"), r.p_pos, 0.5 - d.z_half * r.se_pos);
    pos.status = Status::from_bool(r.pos_below_half(d.z_half));
    out.checks.push(pos);
    let mut neg = Check::at_most(format!("p_neg-below-half{tag}"), r.p_neg, 0.5 - d.z_half * r.se_neg);
    neg.status = Status::from_bool(r.neg_below_half(d.z_half));
    out.checks.push(neg);
}

fn discontinuity(d: &Discontinuity, ctx: &Context<'_>) -> Result<Outcome> {
    let mut out = Outcome::default();
    let c = match (d.c, &d.calibration) {
        (Some(c), _) => c,
        (None, Some(cal)) => {
            let cal = calibrate_c(d.gamma, d.sigma2, cal.ppu, cal.reps, cal.q, ctx.rngp.child(0), ctx.execution)?;
            out.checks.push(Check::at_least("calibration-margin", cal.margin_se(), d.z_calibration));
            out.metric("calibration", &cal);
            cal.c
        }
        (None, None) => unreachable!("rejected by validation"),
    };
    out.metric("c", c);
    let r = discontinuity_experiment(d.gamma, c, d.sigma2, d.extent, d.ppu, d.reps, ctx.rngp.child(1), ctx.execution)?;
    io::write_discontinuity(&ctx.dir.join("discontinuity.csv"), &r)?;
    discontinuity_checks("", &r, d, &mut out);
    out.metric("report", &r);
    if let Some(ppu) = d.stability_ppu {
        let r2 =
            discontinuity_experiment(d.gamma, c, d.sigma2, d.extent, ppu, d.reps, ctx.rngp.child(2), ctx.execution)?;
        io::write_discontinuity(&ctx.dir.join(format!("discontinuity_ppu{ppu}.csv")), &r2)?;
        let (shift, pooled) = r.zero_shift(&r2);
        out.checks.push(Check::at_most("p_zero-stability", shift, d.z_stability * pooled));
        out.metric("report_refined", &r2);
    }
    Ok(out)
}

fn random_atoms<R: Rng + ?Sized>(rng: &mut R, d: usize, threshold: bool) -> Vec<MixtureAtom> {
    let j = rng.random_range(1..=3);
    let raw: Vec<f64> = (0..j).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut atoms: Vec<MixtureAtom> = raw
        .iter()
        .map(|w| {
            let x = uniform_vec(rng, d, -1.5, 1.5);
            let atom = MixtureAtom::new(w / total, x, rng.random_range(0.1..2.0));
            if threshold {
                atom.with_a(rng.random_range(0.2..3.0)).with_b(rng.random_range(0.2..3.0))
            } else {
                atom.with_fu(rng.random_range(0.1..2.0))
            }
        })
        .collect();
    let rest: f64 = atoms[1..].iter().map(|a| a.w).sum();
    atoms[0].w = 1.0 - rest;
    atoms
}

fn random_model<R: Rng + ?Sized>(rng: &mut R, family: FamilyKind, d: usize, extent: f64) -> ModelSpace {
    match family {
        FamilyKind::MaxScore => ModelSpace::maxscore(random_atoms(rng, d, false), extent),
        FamilyKind::ThreshReg => ModelSpace::threshreg(random_atoms(rng, d, true), extent),
        FamilyKind::Erm => {
            let f = uniform_vec(rng, d, 0.2, 2.0);
            let p = (0..d)
                .map(|l| {
                    let mag = rng.random_range(0.2..2.0);
                    if l == 0 {
                        mag
                    } else {
                        -mag
                    }
                })
                .collect();
            ModelSpace::erm(f, p, extent)
        }
    }
}

fn verdict_status(v: Verdict) -> Status {
    match v {
        Verdict::Pass => Status::Pass,
        Verdict::Fail => Status::Fail,
        Verdict::Inconclusive => Status::Inconclusive,
    }
}

fn representation_check(name: String, r: &RepresentationReport) -> Check {
    Check {
        name,
        status: verdict_status(r.verdict),
        value: Some(r.max_error),
        threshold: Some(r.tolerance),
        detail: format!("max error {:e}, max error estimate {:e}", r.max_error, r.max_error_estimate),
    }
}

fn rkhs_verify(r: &RkhsVerify, ctx: &Context<'_>) -> Result<Outcome> {
    let mut out = Outcome::default();
    let mut rng = ctx.rngp.substream(0);
    let mut models = r.models.clone();
    if let Some(rand) = &r.random {
        for _ in 0..rand.count {
            let d = rand.dims[rng.random_range(0..rand.dims.len())];
            let extent = rand.extents[rng.random_range(0..rand.extents.len())];
            models.push(random_model(&mut rng, rand.family, d, extent));
        }
    }
    let (tol, cross_tol) = (ctx.tol(r.tol), ctx.tol(r.cross_tol));
    let mut norms = Vec::new();
    for (i, ms) in models.iter().enumerate() {
        let (d, n) = (ms.dim(), ms.extent);
        let pairs: Vec<(Vec<f64>, Vec<f64>)> =
            (0..r.pairs).map(|_| (uniform_vec(&mut rng, d, -n, n), uniform_vec(&mut rng, d, -n, n))).collect();
        let points: Vec<Vec<f64>> = pairs.iter().map(|(s, _)| s.clone()).collect();
        let cov = verify_cov_representation(ms, &pairs, r.quadrature, tol)?;
        let mean = verify_mean_representation(ms, &points, r.quadrature, tol)?;
        io::write_representation(&ctx.dir.join(format!("rkhs_cov_{i}.csv")), &cov)?;
        io::write_representation(&ctx.dir.join(format!("rkhs_mean_{i}.csv")), &mean)?;
        let kind = kind_name(&ms.family);
        out.checks.push(representation_check(format!("cov-representation[{i}:{kind}]"), &cov));
        out.checks.push(representation_check(format!("mean-representation[{i}:{kind}]"), &mean));
        let norm = l2_norm_l(ms, r.quadrature)?;
        out.checks.push(Check::new(
            format!("l-norm-finite[{i}]"),
            Status::from_bool(norm.finite),
            format!("‖l‖² = {} ± {:e}", norm.value, norm.error_estimate),
        ));
        norms.push(norm.value);
        if kind == "erm" {
            let worst = pairs
                .iter()
                .map(|(s, t)| erm_cross_term(ms, s, t, r.quadrature).map(f64::abs))
                .try_fold(0.0f64, |acc, v| v.map(|v| acc.max(v)))?;
            out.checks.push(Check::at_most(format!("erm-cross-term[{i}]"), worst, cross_tol));
        }
    }
    out.metric("models", &models);
    out.metric("l_norms_squared", &norms);
    Ok(out)
}

fn estimator_mc(e: &EstimatorMc, ctx: &Context<'_>) -> Result<Outcome> {
    let mut out = Outcome::default();
    if let Some(o) = &e.oracle {
        let mut rows = Vec::new();
        for (g, dgp) in o.dgps.iter().enumerate() {
            let mut rng = ctx.rngp.child(g as u64).substream(0);
            let (mut mismatches, mut skipped) = (0usize, 0usize);
            let d = dgp.dim();
            let grid = ThetaGrid::centered(dgp.theta0(), o.grid_half_width, o.grid_spacing)?;
            for inst in 0..o.instances {
                let n = rng.random_range(o.n_min..=o.n_max);
                let data = dgp.generate(n, &mut rng)?;
                let (fast, slow) = match dgp {
                    DgpSpec::MaxScore(_) => (fit_maxscore(&data, &grid), brute_force_maxscore(&data, &grid)),
                    DgpSpec::Erm(_) => (fit_erm(&data, d), brute_force_erm(&data, d)),
                    DgpSpec::ThreshReg(_) => (fit_threshreg(&data, &grid), brute_force_threshreg(&data, &grid)),
                };
                let (agree, fo, so) = match (&fast, &slow) {
                    (Ok(f), Ok(s)) => {
                        skipped += s.skipped;
                        let same = match dgp {
                            DgpSpec::ThreshReg(_) => {
                                f.index == s.index && (f.objective - s.objective).abs() <= 1e-9 * (1.0 + s.objective)
                            }
                            DgpSpec::Erm(_) => f.theta == s.theta && f.objective == s.objective,
                            DgpSpec::MaxScore(_) => f.index == s.index && f.objective == s.objective,
                        };
                        (same, f.objective, s.objective)
                    }
                    (Err(_), Err(_)) => (true, f64::NAN, f64::NAN),
                    _ => (false, f64::NAN, f64::NAN),
                };
                if !agree {
                    mismatches += 1;
                }
                rows.push(vec![
                    g.to_string(),
                    kind_name(dgp),
                    inst.to_string(),
                    n.to_string(),
                    io::fmt_f64(fo),
                    io::fmt_f64(so),
                    agree.to_string(),
                ]);
            }
            let mut check = Check::at_most(format!("oracle-agreement[{g}:{}]", kind_name(dgp)), mismatches as f64, 0.0);
            check.detail =
                format!("{mismatches} mismatches in {} instances, {skipped} singular candidates skipped", o.instances);
            out.checks.push(check);
        }
        io::write_rows(
            &ctx.dir.join("oracle.csv"),
            &["dgp", "kind", "instance", "n", "fast_objective", "brute_objective", "agree"],
            rows,
        )?;
    }
    if let Some(c) = &e.convergence {
        let (m, k) = limit_specs(&c.dgp)?;
        let lat = build_lattice(k.dim(), c.limit.extent, c.limit.ppu)?;
        let limit = ctx.mc(&k, &m, &lat, c.limit.reps, ctx.rngp.child(100), &mut out)?;
        ctx.write_law("limit.csv", &limit, &lat)?;
        let mut laws = Vec::new();
        let mut ks = Vec::new();
        for (i, &n) in c.ns.iter().enumerate() {
            let law = sampling_law(&c.dgp, n, c.reps, ctx.rngp.child(200 + i as u64), c.grid, ctx.execution)?;
            let dist = ks_distance(&law, KsTarget::Law(&limit))?;
            ks.push(KsRow { n, ks: dist, replications: law.replications() });
            laws.push((n, law));
        }
        let refs: Vec<(usize, &EmpiricalLaw)> = laws.iter().map(|(n, l)| (*n, l)).collect();
        io::write_sampling_laws(&ctx.dir.join("sampling_laws.csv"), &refs)?;
        io::write_json(
            &ctx.dir.join("sampling_laws.json"),
            &json!({ "config_hash": ctx.config_hash, "master_seed": ctx.rngp.master_seed, "ns": c.ns, "replications": c.reps }),
        )?;
        io::write_ks(&ctx.dir.join("ks.csv"), &ks)?;
        let sd = 0.26 * (1.0 / c.reps as f64 + 1.0 / c.limit.reps as f64).sqrt();
        let slack = c.z * std::f64::consts::SQRT_2 * sd;
        let worst_rise = ks.windows(2).map(|w| w[1].ks - w[0].ks).fold(f64::NEG_INFINITY, f64::max);
        if ks.len() > 1 {
            let mut mono = Check::at_most("ks-monotone", worst_rise, slack);
            mono.detail = format!("largest increase {worst_rise} against slack {slack}");
            out.checks.push(mono);
        }
        let last = ks.last().expect("ns is nonempty").ks;
        out.checks.push(Check::at_most("ks-final", last, ctx.tol(c.final_tol)));
        out.metric("ks", &ks);
    }
    Ok(out)
}

/// Smallest `k` with `k/B ≥ t`, by exact rational comparison on `t = a/b`.
fn oracle_rank(draws: usize, a: usize, b: usize) -> usize {
    (a * draws).div_ceil(b).max(1)
}

fn ci_experiment(c: &CiExperiment, ctx: &Context<'_>) -> Result<Outcome> {
    let mut out = Outcome::default();
    if c.percentile_sets > 0 {
        let mut rng = ctx.rngp.child(0).substream(0);
        let levels = [(1, 40), (1, 20), (1, 10), (1, 4), (1, 2), (3, 4), (9, 10), (19, 20), (39, 40)];
        let mut mismatches = 0usize;
        for set in 0..c.percentile_sets {
            let b = 1 + (rng.next_u32() % 64) as usize;
            let draws: Vec<f64> = (0..b).map(|_| f64::from(rng.random_range(-20..20)) / 4.0).collect();
            let mut sorted = draws.clone();
            sorted.sort_by(f64::total_cmp);
            let pq = PercentileQuery::new(draws)?;
            for &(a, den) in &levels {
                if percentile_quantile(&pq, a as f64 / den as f64)? != sorted[oracle_rank(b, a, den) - 1] {
                    mismatches += 1;
                }
            }
            for (an, ad) in [(1usize, 10usize), (1, 20)] {
                let point = 0.25 * set as f64;
                let got = percentile_interval(point, &pq, an as f64 / ad as f64)?;
                let hi_q = sorted[oracle_rank(b, 2 * ad - an, 2 * ad) - 1];
                let lo_q = sorted[oracle_rank(b, an, 2 * ad) - 1];
                if got != (point - hi_q, point - lo_q) {
                    mismatches += 1;
                }
            }
        }
        let mut check = Check::at_most("percentile-order-statistics", mismatches as f64, 0.0);
        check.detail = format!("{mismatches} mismatches over {} draw sets", c.percentile_sets);
        out.checks.push(check);
    }
    if let Some(spec) = &c.coverage {
        let rep = coverage_experiment(spec, ctx.rngp.child(1), ctx.execution)?;
        io::write_coverage(&ctx.dir.join("coverage.csv"), &rep)?;
        out.metric(
            "coverage",
            json!({
                "coverage": rep.coverage,
                "coverage_se": rep.coverage_se,
                "nominal": rep.nominal,
                "m": rep.m,
                "mean_length": rep.mean_length,
            }),
        );
    }
    Ok(out)
}
