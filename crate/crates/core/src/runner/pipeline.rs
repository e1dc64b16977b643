use num_complex::Complex64;

use super::config::{BaseKind, CheckName, ConfigError, DirectionSpec, ExperimentConfig};
use super::record::{CheckRecord, RunRecord, Verdict, WitnessRecord, SCHEMA_VERSION};
use super::{RunError, SeedChain};
use crate::control::{
    certify_control, check_summability, resolve_direction, CertReport, Certificate, CertifyOptions, ControlFunction,
    JensenParams,
};
use crate::error::Error;
use crate::hyers::{
    default_probes, sample_points, stabilize, uniqueness_probe, verify_bound, LimitMap, Map, PerturbedMap,
    StabilizationReport, StabilizeOptions,
};
use crate::jordan::{
    default_a_samples, der_residual, hom_residual, matrix_units, spanning_check, superstability_check, MorphismKind,
};
use crate::seeded;
use crate::talg::{norm, AlgebraCtx, Element};
use crate::unimodular::{c_linearity_from_t1, default_lambda_samples, i_linearity_check};

/// Steps of the rescaled bracket curve tracked by the superstability check.
const SUPERSTAB_STEPS: usize = 40;
/// Base-point spread of the scalar-linearity checks.
const LINEARITY_POINTS: usize = 20;
const SPAN_N_LIST: [usize; 3] = [1, 2, 3];
const SPAN_A_SAMPLES: usize = 4;
const UNIQUENESS_SEEDS: usize = 3;

fn config_error(field: &str, e: impl ToString) -> RunError {
    RunError::Config(ConfigError {
        field: Some(field.to_string()),
        line: None,
        message: e.to_string(),
    })
}

/// Builds the map under test. `seeds` supplies the base and perturbation
/// seeds.
pub fn build_map(cfg: &ExperimentConfig, ctx: &AlgebraCtx, base_seed: u64, pert_seed: u64) -> crate::Result<PerturbedMap> {
    let n = cfg.dim;
    let mut rng = seeded::rng(base_seed);
    let base = match cfg.map.base {
        BaseKind::Zero => Element::zeros(ctx.matrix_shape()),
        BaseKind::Identity => Element::identity(n),
        BaseKind::Random => seeded::gaussian_element(ctx.matrix_shape(), &mut rng),
        BaseKind::Unitary => seeded::random_unitary(n, &mut rng),
        BaseKind::Derivation => Element::identity(n).scale(Complex64::new(0.0, cfg.map.tau.unwrap_or(0.0))),
    };
    PerturbedMap::new(*ctx, cfg.shape(), base, cfg.perturbation(pert_seed))
}

fn refusal(e: &Error) -> String {
    match e {
        Error::Refused(m) => m.clone(),
        other => other.to_string(),
    }
}

/// Verdict for an error inside a check: refusals stay refusals, anything else
/// is a failure.
fn errored(name: CheckName, e: &Error) -> CheckRecord {
    let verdict = if matches!(e, Error::Refused(_) | Error::VectorMode(_) | Error::NotCertified) {
        Verdict::Refused
    } else {
        Verdict::Fail
    };
    CheckRecord {
        note: Some(refusal(e)),
        ..CheckRecord::new(name, verdict)
    }
}

fn cert_record(name: CheckName, rep: &CertReport) -> CheckRecord {
    let mut rec = CheckRecord::new(name, Verdict::from_pass(rep.pass))
        .metric("max_ratio", rep.max_ratio)
        .metric("samples", rep.samples as f64);
    rec.max = Some(rep.max_ratio);
    if let Some(w) = &rep.witness {
        rec.witness = Some(WitnessRecord::new("x", w.residual, &w.x));
        rec = rec.metric("witness_phi", w.phi);
    }
    rec
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    ctx: AlgebraCtx,
    f: PerturbedMap,
    cf: ControlFunction,
    params: JensenParams,
}

impl Context<'_> {
    fn certify(&self, seed: u64, kind: Option<MorphismKind>) -> crate::Result<CertReport> {
        let mut opts = CertifyOptions::new(self.cfg.sampling.cert_samples, seed);
        if let Some(kind) = kind {
            opts = opts.coupled(kind).with_a_scales(self.cfg.sampling.a_scales.clone());
        }
        certify_control(&self.ctx, &self.f, &self.cf, &self.params, &opts)
    }

    fn stabilize(&self, cert: &Certificate, seeds: &mut SeedChain) -> crate::Result<StabilizationReport> {
        let probes = default_probes(&self.ctx, self.f.shape(), seeds.get("probes"))?;
        stabilize(
            &self.ctx,
            &self.f,
            &self.params,
            &self.cf,
            cert,
            &probes,
            &self.stabilize_options(seeds.get("stabilize")),
        )
    }

    fn stabilize_options(&self, seed: u64) -> StabilizeOptions {
        StabilizeOptions {
            cauchy_tol: self.cfg.tolerances.cauchy_tol,
            n_max: self.cfg.sampling.n_max,
            seed,
            tail_tol: self.cfg.tolerances.tail_tol,
            ..StabilizeOptions::default()
        }
    }
}

fn kinds_for(cfg: &ExperimentConfig) -> Vec<MorphismKind> {
    let mut kinds = Vec::new();
    if cfg.is_enabled(CheckName::JordanHom) {
        kinds.push(MorphismKind::JordanHom);
    }
    if cfg.is_enabled(CheckName::JordanDer) {
        kinds.push(MorphismKind::JordanDer);
    }
    if kinds.is_empty() {
        kinds.push(MorphismKind::JordanHom);
    }
    kinds
}

fn kind_label(kind: MorphismKind) -> &'static str {
    if kind.is_hom() {
        "hom"
    } else {
        "der"
    }
}

pub(super) fn run_checks(cfg: &ExperimentConfig) -> Result<RunRecord, RunError> {
    let ctx = AlgebraCtx::new(cfg.dim).map_err(|e| config_error("dim", e))?;
    let cf = cfg.control_function().map_err(|e| config_error("control", e))?;
    let mut params = cfg.base_params().map_err(|e| config_error("r", e))?;
    let direction = match cfg.direction {
        DirectionSpec::Auto => resolve_direction(&cf, &params),
        _ => check_summability(&cf, &params).map(|()| params.direction),
    };
    params.direction = match direction {
        Ok(d) => d,
        Err(Error::Divergent(m)) => return Err(RunError::Divergent(m)),
        Err(e) => return Err(config_error("control", e)),
    };

    let mut seeds = SeedChain::new(cfg.seed);
    let base_seed = seeds.get("base");
    let pert_seed = match cfg.perturbation.seed {
        Some(s) => s,
        None => seeds.get("perturbation"),
    };
    let f = build_map(cfg, &ctx, base_seed, pert_seed).map_err(|e| config_error("map", e))?;
    let cx = Context {
        cfg,
        ctx,
        f,
        cf,
        params,
    };
    let en = |c: CheckName| cfg.is_enabled(c);

    // prerequisites, computed once in a fixed order
    let needs_plain = [
        CheckName::Jensen,
        CheckName::Bound,
        CheckName::Superstab,
        CheckName::T1Linearity,
        CheckName::ILinearity,
        CheckName::Uniqueness,
    ]
    .into_iter()
    .any(en);
    let plain = needs_plain.then(|| cx.certify(seeds.get("certify"), None));
    let matrix = cfg.shape().is_matrix();
    let coupled_cert = |kind: MorphismKind, seeds: &mut SeedChain| {
        let label = format!("certify-{}", kind_label(kind));
        cx.certify(seeds.get(&label), Some(kind))
    };
    let hom_cert = (en(CheckName::JordanHom) && matrix).then(|| coupled_cert(MorphismKind::JordanHom, &mut seeds));
    let der_cert = (en(CheckName::JordanDer) && matrix).then(|| coupled_cert(MorphismKind::JordanDer, &mut seeds));

    let certificate = [&plain, &hom_cert, &der_cert]
        .into_iter()
        .flatten()
        .filter_map(|r| r.as_ref().ok().and_then(CertReport::certificate))
        .next();
    let needs_stab = [
        CheckName::Bound,
        CheckName::JordanHom,
        CheckName::JordanDer,
        CheckName::Superstab,
        CheckName::T1Linearity,
        CheckName::ILinearity,
    ]
    .into_iter()
    .any(en);
    let stab: Option<Result<StabilizationReport, String>> = needs_stab.then(|| match &certificate {
        None => Err("no passing certification of the control function".to_string()),
        Some(cert) => match cx.stabilize(cert, &mut seeds) {
            Ok(rep) if rep.h.is_some() => Ok(rep),
            Ok(rep) => Err(format!(
                "direct method did not converge: {}",
                rep.failures.join("; ")
            )),
            Err(e) => Err(refusal(&e)),
        },
    });
    let stab_ok = stab.as_ref().and_then(|s| s.as_ref().ok());
    let stab_err = || -> String {
        match &stab {
            Some(Err(m)) => m.clone(),
            _ => "stabilization unavailable".into(),
        }
    };

    let mut checks = Vec::with_capacity(cfg.checks.len());
    for &name in &CheckName::ALL {
        if !en(name) {
            continue;
        }
        let rec = match name {
            CheckName::Jensen => match plain.as_ref().expect("certified above") {
                Ok(rep) => cert_record(name, rep),
                Err(e) => errored(name, e),
            },
            CheckName::Bound => match stab_ok {
                None => CheckRecord::refused(name, stab_err()),
                Some(rep) => bound_check(&cx, rep, seeds.get("bound")),
            },
            CheckName::JordanHom | CheckName::JordanDer => {
                let kind = if name == CheckName::JordanHom {
                    MorphismKind::JordanHom
                } else {
                    MorphismKind::JordanDer
                };
                let cert = if kind.is_hom() { &hom_cert } else { &der_cert };
                match (cert, stab_ok) {
                    (None, _) => CheckRecord::refused(name, "Jordan checks need matrix mode"),
                    (Some(Err(e)), _) => errored(name, e),
                    (Some(Ok(c)), _) if !c.pass => {
                        let mut rec = cert_record(name, c);
                        rec.note = Some("coupled inequality not certified".into());
                        rec
                    }
                    (Some(Ok(_)), None) => CheckRecord::refused(name, stab_err()),
                    (Some(Ok(c)), Some(rep)) => {
                        let seed = seeds.get(&format!("jordan-{}", kind_label(kind)));
                        jordan_check(&cx, rep, kind, seed)
                            .unwrap_or_else(|e| errored(name, &e))
                            .metric("cert_max_ratio", c.max_ratio)
                    }
                }
            }
            CheckName::Superstab => match stab_ok {
                None => CheckRecord::refused(name, stab_err()),
                Some(rep) => {
                    let seed = seeds.get("superstab");
                    superstab_check(&cx, rep, &kinds_for(cfg), seed).unwrap_or_else(|e| errored(name, &e))
                }
            },
            CheckName::Spanning => {
                let seed = seeds.get("spanning");
                spanning(&cx, &kinds_for(cfg), seed).unwrap_or_else(|e| errored(name, &e))
            }
            CheckName::T1Linearity | CheckName::ILinearity => match stab_ok {
                None => CheckRecord::refused(name, stab_err()),
                Some(rep) => {
                    let seed = seeds.get(name.as_str());
                    linearity(&cx, rep, name, seed).unwrap_or_else(|e| errored(name, &e))
                }
            },
            CheckName::Uniqueness => match &certificate {
                None => CheckRecord::refused(name, "no passing certification of the control function"),
                Some(cert) => {
                    let base = seeds.get("uniqueness");
                    let run_seeds: Vec<u64> = (0..UNIQUENESS_SEEDS as u64).map(|i| seeded::derive_seed(base, &i.to_string())).collect();
                    match uniqueness_probe(&cx.ctx, &cx.f, &cx.params, &cx.cf, cert, &run_seeds, &cx.stabilize_options(base)) {
                        Ok(d) => {
                            let mut rec = CheckRecord::new(name, Verdict::from_pass(d <= cfg.tolerances.check_tol))
                                .metric("max_column_distance", d);
                            rec.max = Some(d);
                            rec
                        }
                        Err(e) => errored(name, &e),
                    }
                }
            },
        };
        checks.push(rec);
    }

    let verdict = Verdict::from_pass(checks.iter().all(|c| c.verdict == Verdict::Pass));
    Ok(RunRecord {
        schema_version: SCHEMA_VERSION,
        tool: env!("CARGO_PKG_NAME").to_string(),
        tool_version: super::tool_version().to_string(),
        config: cfg.clone(),
        direction: params.direction,
        seed_chain: seeds.into_map(),
        n_star: stab_ok.and_then(|r| r.n_star),
        bound: stab_ok.map(|r| r.bound),
        max_fh_gap: stab_ok.map(|r| r.max_fh_gap),
        checks,
        verdict,
        wall_time_s: 0.0,
    })
}

fn bound_check(cx: &Context<'_>, rep: &StabilizationReport, seed: u64) -> CheckRecord {
    let name = CheckName::Bound;
    let vb = match verify_bound(
        &cx.ctx,
        &cx.f,
        rep,
        &cx.cf,
        &cx.params,
        cx.cfg.sampling.bound_samples,
        seed,
        cx.cfg.tolerances.tail_tol,
    ) {
        Ok(vb) => vb,
        Err(e) => return errored(name, &e),
    };
    let pass = rep.pass && vb.max_violation <= 0.0;
    let mut rec = CheckRecord::new(name, Verdict::from_pass(pass))
        .metric("n_star", rep.n_star.unwrap_or(0) as f64)
        .metric("cauchy_gap", rep.cauchy_gap)
        .metric("bound_at_unit_norm", rep.bound)
        .metric("max_fh_gap", rep.max_fh_gap)
        .metric("max_bound_ratio", rep.max_bound_ratio)
        .metric("max_violation", vb.max_violation)
        .metric("additivity_residual", rep.max_additivity_residual)
        .metric("homogeneity_residual", rep.homogeneity_residual)
        .metric("jensen_residual_of_h", rep.max_jensen_residual_of_h)
        .metric("linear_fit_residual", rep.linear_fit_residual);
    rec.max = Some(rep.max_bound_ratio);
    if let Some(w) = &vb.witness {
        rec.witness = Some(WitnessRecord::new("x", vb.max_violation, w));
    }
    if !rep.failures.is_empty() {
        rec.note = Some(rep.failures.join("; "));
    }
    rec
}

fn jordan_check(
    cx: &Context<'_>,
    rep: &StabilizationReport,
    kind: MorphismKind,
    seed: u64,
) -> crate::Result<CheckRecord> {
    let name = if kind.is_hom() {
        CheckName::JordanHom
    } else {
        CheckName::JordanDer
    };
    let h = rep
        .limit_map(&cx.ctx, &cx.f, &cx.params)
        .ok_or_else(|| Error::Refused("no limit".into()))?;
    let samples = default_a_samples(&cx.ctx, seed, cx.cfg.sampling.a_samples)?;
    let mut scaled = Vec::with_capacity(samples.len());
    for a in &samples {
        let res = if kind.is_hom() {
            hom_residual(&cx.ctx, &h, a)?
        } else {
            der_residual(&cx.ctx, &h, a)?
        };
        scaled.push(res / norm(&cx.ctx, a)?.powi(3));
    }
    let (iw, worst) = argmax(&scaled);
    let mut rec = CheckRecord::new(name, Verdict::from_pass(worst <= cx.cfg.tolerances.check_tol)).stats(&scaled);
    rec.witness = Some(WitnessRecord::new("a", worst, &samples[iw]));
    Ok(rec.metric("n_star", h.step() as f64))
}

fn argmax(v: &[f64]) -> (usize, f64) {
    v.iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, x)| if x > bv { (i, x) } else { (bi, bv) })
}

fn superstab_check(
    cx: &Context<'_>,
    rep: &StabilizationReport,
    kinds: &[MorphismKind],
    seed: u64,
) -> crate::Result<CheckRecord> {
    let h = rep.h.as_ref().ok_or_else(|| Error::Refused("no limit operator".into()))?;
    let samples = default_a_samples(&cx.ctx, seed, cx.cfg.sampling.a_samples)?;
    let mut rec = CheckRecord::new(CheckName::Superstab, Verdict::Pass);
    let mut tails = Vec::new();
    for &kind in kinds {
        let ss = superstability_check(&cx.ctx, h, &cx.params, &cx.cf, kind, SUPERSTAB_STEPS, &samples)?;
        let label = kind_label(kind);
        let tail = ss.residual_curve.last().map(|c| c.1).unwrap_or(f64::NAN);
        rec = rec
            .metric(&format!("{label}_curve_start"), ss.residual_curve.first().map(|c| c.1).unwrap_or(f64::NAN))
            .metric(&format!("{label}_curve_end"), tail)
            .metric(&format!("{label}_final_residual"), ss.final_residual);
        tails.push(tail.max(ss.final_residual));
        if !ss.pass {
            rec.verdict = Verdict::Fail;
        }
    }
    rec.max = tails.iter().copied().reduce(f64::max);
    Ok(rec)
}

fn spanning(cx: &Context<'_>, kinds: &[MorphismKind], seed: u64) -> crate::Result<CheckRecord> {
    let units = matrix_units(cx.cfg.dim);
    let samples = default_a_samples(&cx.ctx, seed, SPAN_A_SAMPLES)?;
    let tol = cx.cfg.tolerances.check_tol;
    let mut rec = CheckRecord::new(CheckName::Spanning, Verdict::Pass);
    let mut worst = 0.0_f64;
    for &kind in kinds {
        let sp = spanning_check(
            &cx.ctx,
            &cx.f,
            &cx.params,
            &units,
            &SPAN_N_LIST,
            &samples,
            kind,
            cx.cfg.tolerances.cauchy_tol,
            cx.cfg.sampling.n_max,
        )?;
        let label = kind_label(kind);
        rec = rec
            .metric(&format!("{label}_hypothesis_residual"), sp.hypothesis_residual)
            .metric(&format!("{label}_conclusion_residual"), sp.conclusion_residual);
        worst = worst.max(sp.hypothesis_residual).max(sp.conclusion_residual);
        if sp.hypothesis_residual > tol || sp.conclusion_residual > tol {
            rec.verdict = Verdict::Fail;
            if let Some(w) = sp.witness {
                rec.witness = Some(WitnessRecord::new(
                    format!("a (s1 = E{}, s2 = E{}, n = {})", w.s1, w.s2, w.n),
                    w.defect,
                    &samples[w.a],
                ));
            }
        }
    }
    rec.max = Some(worst);
    Ok(rec)
}

fn linearity(cx: &Context<'_>, rep: &StabilizationReport, name: CheckName, seed: u64) -> crate::Result<CheckRecord> {
    let h: LimitMap<'_> = rep
        .limit_map(&cx.ctx, &cx.f, &cx.params)
        .ok_or_else(|| Error::Refused("no limit".into()))?;
    let xs = sample_points(&cx.ctx, cx.f.shape(), seed, LINEARITY_POINTS, &[0.1, 1.0, 10.0])?;
    let tol = cx.cfg.tolerances.check_tol;
    let (pass, max, witness, mut extra) = if name == CheckName::T1Linearity {
        let lambdas = default_lambda_samples(seeded::derive_seed(seed, "lambda"));
        let r = c_linearity_from_t1(&cx.ctx, &h, &lambdas, &xs, tol, seed)?;
        (r.pass, r.max_defect, r.witness, Vec::new())
    } else {
        let r = i_linearity_check(&cx.ctx, &h, &xs, tol, seed)?;
        (
            r.pass,
            r.max_defect,
            r.witness,
            vec![("i_defect", r.i_defect), ("assembled_defect", r.assembled_defect)],
        )
    };
    let mut rec = CheckRecord::new(name, Verdict::from_pass(pass));
    rec.max = Some(max);
    for (k, v) in extra.drain(..) {
        rec = rec.metric(k, v);
    }
    if let Some(w) = witness {
        rec.witness = Some(WitnessRecord::new(format!("x ({}, scalar {})", w.what, w.scalar), w.defect, &w.x));
    }
    Ok(rec)
}
