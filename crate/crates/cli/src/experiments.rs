use std::fs::File;
use std::io::BufWriter;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use nclab_core::crossed::{
    apply_word, block_commutator_check, check_covariance, graded_shift_commutator_norm,
    interior_columns, lip_probe, normalize_with, parse_word, Angle, CovariantTruncation, LipProbe,
};
use nclab_core::gasket::{self, GasketFunction, LatticePoint};
use nclab_core::lattice::IntMatrix;
use nclab_core::operator::{clifford_generators, commutator, operator_norm, ComplexMatrix};
use nclab_core::rotation::{self, NCMonomialSum};
use nclab_core::spectral::{
    dimension_fit, dimension_fit_dyadic, dyadic_grid, nat_spectrum, sandwich_check,
    tensor_spectrum, DimensionFit, WeightedSpectrum,
};
use nclab_core::torus::{self, CoveringMatrix, TorusElement};
use nclab_core::uhf::{self, UhfParams, WindowElement};

use crate::args::{
    Coordinate, CovarianceArgs, DimArgs, GasketCoverArgs, LipArgs, Model, ModelArgs, RewriteArgs,
    ScalingArgs,
};
use crate::error::{config, CliResult};
use crate::report::{Assertion, Report};

/// A finished experiment: the JSON report plus an optional plain-text
/// rendering used by `--format text`.
pub struct Outcome {
    pub report: Report,
    pub text: Option<String>,
}

impl Outcome {
    fn json(report: Report) -> Self {
        Self { report, text: None }
    }
}

const COVARIANCE_TOL: f64 = 1e-10;

fn parse_ints(text: &str, what: &str) -> CliResult<Vec<i64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<i64>()
                .map_err(|e| config(format!("{what}: {t:?}: {e}")))
        })
        .collect()
}

fn parse_matrix(text: &str) -> CliResult<IntMatrix> {
    let rows = text
        .split(';')
        .map(|r| parse_ints(r, "--b"))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(IntMatrix::new(rows)?)
}

fn covering(m: &ModelArgs, p: usize, default: &str) -> CliResult<CoveringMatrix> {
    let b = match &m.b {
        Some(text) => parse_matrix(text)?,
        None if default.is_empty() => IntMatrix::scalar(p, 2),
        None => parse_matrix(default)?,
    };
    Ok(CoveringMatrix::new(b)?)
}

fn coordinate(c: Coordinate) -> GasketFunction {
    match c {
        Coordinate::X => GasketFunction::x_coordinate(),
        Coordinate::Y => GasketFunction::y_coordinate(),
    }
}

fn random_gasket_points(rng: &mut ChaCha8Rng, n: usize, len: usize) -> Vec<LatticePoint> {
    (0..n)
        .map(|_| {
            let word: Vec<u8> = (0..len).map(|_| rng.gen_range(0..3)).collect();
            gasket::address_point(&word, rng.gen_range(0..3))
        })
        .collect()
}

struct ModelSpectrum {
    spectrum: WeightedSpectrum,
    expected: f64,
    tolerance: f64,
    /// Preferred fit grid when the dyadic default is not appropriate.
    grid: Option<Vec<f64>>,
    nat_cutoff: usize,
}

fn model_spectrum(m: &ModelArgs) -> CliResult<ModelSpectrum> {
    Ok(match m.model {
        Model::Nat => {
            let n = m.n.unwrap_or(2048);
            ModelSpectrum {
                spectrum: nat_spectrum(n)?,
                expected: 1.0,
                tolerance: 0.03,
                grid: Some(dyadic_grid(8.0, n as f64 / 2.0)),
                nat_cutoff: n,
            }
        }
        Model::Torus => {
            let k = m.k.unwrap_or(64);
            let spectrum = if m.layers == 0 {
                torus::torus_spectrum(m.p, k)?
            } else {
                let b = covering(m, m.p, "")?;
                torus::solenoid_spectrum(&b, m.layers, k)?
            };
            let dim = if m.layers == 0 {
                m.p
            } else {
                covering(m, m.p, "")?.dim()
            };
            ModelSpectrum {
                spectrum,
                expected: dim as f64,
                tolerance: 0.1,
                grid: None,
                nat_cutoff: 1024,
            }
        }
        Model::Uhf => {
            let depth = m.depth.unwrap_or(12);
            ModelSpectrum {
                spectrum: uhf::ci_spectrum(m.r, m.s, depth)?,
                expected: 2.0 / m.s,
                tolerance: 0.05,
                grid: Some(uhf::ci_grid(m.r, m.s, depth)),
                nat_cutoff: (uhf::ci_level(m.r, m.s, depth as i64) as usize).min(1 << 16),
            }
        }
        Model::Gasket => ModelSpectrum {
            spectrum: gasket::gasket_spectrum(m.out_level, m.depth.unwrap_or(10))?,
            expected: 3f64.log2(),
            tolerance: 0.05,
            grid: None,
            nat_cutoff: 1024,
        },
        Model::Rotation => {
            return Err(config(
                "the rotation model has no finite spectrum; use lip or covariance",
            ))
        }
    })
}

fn fit(
    spec: &WeightedSpectrum,
    a: &DimArgs,
    default_grid: Option<Vec<f64>>,
) -> CliResult<DimensionFit> {
    Ok(match (a.t_min, a.t_max) {
        (None, None) => match default_grid {
            Some(g) => dimension_fit(spec, &g)?,
            None => dimension_fit_dyadic(spec)?,
        },
        (lo, hi) => {
            let (vlo, vhi) = spec.valid_range()?;
            dimension_fit(spec, &dyadic_grid(lo.unwrap_or(vlo), hi.unwrap_or(vhi)))?
        }
    })
}

fn write_spectrum(a: &DimArgs, spec: &WeightedSpectrum) -> CliResult<()> {
    if let Some(path) = &a.spectrum_csv {
        spec.to_csv(BufWriter::new(File::create(path)?))?;
    }
    Ok(())
}

pub fn dim(a: &DimArgs, echo: Value) -> CliResult<Outcome> {
    let ms = model_spectrum(&a.model)?;
    write_spectrum(a, &ms.spectrum)?;
    let f = fit(&ms.spectrum, a, ms.grid)?;
    let tol = a.tolerance.unwrap_or(ms.tolerance);
    let results = json!({
        "spectrum": ms.spectrum.label(),
        "points": ms.spectrum.len(),
        "fit": f,
    });
    let assertions = vec![Assertion::near("slope", f.slope, ms.expected, tol)];
    Ok(Outcome::json(Report::new(echo, results, assertions)))
}

pub fn crossed_dim(a: &DimArgs, echo: Value) -> CliResult<Outcome> {
    let ms = model_spectrum(&a.model)?;
    let nat = nat_spectrum(a.nat_cutoff.unwrap_or(ms.nat_cutoff))?;
    let spec = tensor_spectrum(&ms.spectrum, &nat)?;
    write_spectrum(a, &spec)?;
    let f = fit(&spec, a, None)?;
    let tol = a.tolerance.unwrap_or(if a.model.model == Model::Torus {
        0.15
    } else {
        0.1
    });
    let mut violations = 0usize;
    for &(t, _) in &f.grid {
        if !sandwich_check(&ms.spectrum, &nat, t)?.holds {
            violations += 1;
        }
    }
    let results = json!({
        "spectrum": spec.label(),
        "points": spec.len(),
        "nat_cutoff": nat.len(),
        "fit": f,
        "sandwich_points": f.grid.len(),
    });
    let assertions = vec![
        Assertion::near("slope", f.slope, ms.expected + 1.0, tol),
        Assertion::near("sandwich violations", violations as f64, 0.0, 0.0),
    ];
    Ok(Outcome::json(Report::new(echo, results, assertions)))
}

fn lip_table(probe: &LipProbe) -> String {
    let mut out = format!(
        "# {} {}\n{:>3} {:>22} {:>22} {:>12}\n",
        probe.model, probe.element, "k", "norm", "envelope", "ratio"
    );
    for (k, (x, e)) in probe.norms.iter().zip(&probe.envelope).enumerate() {
        let ratio = match k {
            0 => "-".to_owned(),
            _ => format!("{:.10}", x / probe.norms[k - 1]),
        };
        out.push_str(&format!("{k:>3} {x:>22.15e} {e:>22.15e} {ratio:>12}\n"));
    }
    out
}

fn ratios(norms: &[f64]) -> Vec<f64> {
    norms.windows(2).map(|w| w[1] / w[0]).collect()
}

fn lip_outcome(
    probe: LipProbe,
    extra: Value,
    mut assertions: Vec<Assertion>,
    echo: Value,
) -> Outcome {
    let worst = probe
        .norms
        .iter()
        .zip(&probe.envelope)
        .map(|(x, e)| if *e > 0.0 { x / e } else { 0.0 })
        .fold(0.0, f64::max);
    assertions.insert(
        0,
        Assertion {
            name: "bounded by envelope".into(),
            passed: probe.bounded,
            value: worst,
            expected: 1.0,
            tolerance: 1e-9,
        },
    );
    let text = lip_table(&probe);
    let results = json!({ "probe": probe, "ratios": ratios(&probe.norms), "details": extra });
    Outcome {
        report: Report::new(echo, results, assertions),
        text: Some(text),
    }
}

pub fn lip(a: &LipArgs, echo: Value) -> CliResult<Outcome> {
    let m = &a.model;
    match m.model {
        Model::Torus => {
            let b = covering(m, m.p, "")?;
            let mode = match &a.mode {
                Some(t) => parse_ints(t, "--mode")?,
                None => (0..b.dim()).map(|i| i64::from(i == 0)).collect(),
            };
            let f = TorusElement::from_modes(b.dim(), &[(mode.clone(), Complex64::new(1.0, 0.0))])?;
            let horizon = a.k_max.unwrap_or(20);
            let report = torus::lip_inequality_check(&b, &f, horizon, 16)?;
            let norms: Vec<f64> = report.steps.iter().map(|s| s.grid).collect();
            let env: Vec<f64> = report.steps.iter().map(|s| s.envelope).collect();
            let probe = lip_probe(
                "torus",
                &format!("e_{mode:?}"),
                horizon as usize,
                |n| Ok(norms[n]),
                |n| Ok(env[n]),
            )?;
            let holds = Assertion::near(
                "inequality report",
                f64::from(u8::from(report.holds)),
                1.0,
                0.0,
            );
            Ok(lip_outcome(
                probe,
                json!({ "steps": report.steps }),
                vec![holds],
                echo,
            ))
        }
        Model::Rotation => {
            let b = covering(m, 2, "")?;
            let mode = parse_ints(a.mode.as_deref().unwrap_or("1,0"), "--mode")?;
            let [u, v] = mode[..] else {
                return Err(config("--mode needs two entries for the rotation model"));
            };
            let params = rotation::build_generators(m.p_theta, m.q)?;
            let horizon = a.k_max.unwrap_or(20);
            let base = rotation::monomial_commutator_norm(u, v);
            let mut freqs = Vec::new();
            let probe = lip_probe(
                "rotation",
                &format!("U^{u} V^{v}"),
                horizon as usize,
                |n| {
                    let (k, norm) = rotation::endo_frequency(b.b(), params.q(), u, v, n as u32)?;
                    freqs.push(k.to_string());
                    Ok(norm)
                },
                |n| Ok(b.inverse_power_norm(n as u32) * base),
            )?;
            Ok(lip_outcome(
                probe,
                json!({ "frequencies": freqs, "theta": params.theta() }),
                Vec::new(),
                echo,
            ))
        }
        Model::Uhf => {
            let unit = parse_ints(&a.unit, "--unit")?;
            let [i, j] = unit[..] else {
                return Err(config("--unit needs two entries"));
            };
            if i < 0 || j < 0 {
                return Err(config("--unit entries must be non-negative"));
            }
            let (i, j) = (i as usize, j as usize);
            let horizon = a.k_max.unwrap_or(4);
            // α⁻ᵏ moves the unit to position −k; the two-leg window follows it.
            let norm_at = |k: usize| -> nclab_core::Result<f64> {
                let pos = -(k as i64);
                let params = UhfParams::new(m.r, m.s, pos, pos + 1)?;
                let f = WindowElement::matrix_unit(m.r, pos, i, j)?;
                let d = uhf::window_dirac(&params)?;
                Ok(operator_norm(&commutator(
                    &d,
                    &uhf::left_mult(&params, &f)?,
                )?))
            };
            let base = norm_at(0)?;
            let probe = lip_probe(
                "uhf",
                &format!("e_{i}{j}@0"),
                horizon as usize,
                norm_at,
                |_| Ok(base),
            )?;
            let expected = uhf::ci_level(m.r, m.s, -1);
            let assertions = ratios(&probe.norms)
                .into_iter()
                .enumerate()
                .map(|(k, r)| {
                    Assertion::near(format!("ratio k={}", k + 1), r, expected, 1e-9 * expected)
                })
                .collect();
            Ok(lip_outcome(
                probe,
                json!({ "expected_ratio": expected }),
                assertions,
                echo,
            ))
        }
        Model::Gasket => {
            let f = coordinate(a.function);
            let horizon = a.k_max.unwrap_or(4);
            let edges = gasket::enumerate_edges(m.out_level, m.depth.unwrap_or(6))?;
            let norm_at = |k: usize| {
                Ok(gasket::edge_commutator_norm(
                    &f.pullback_w0(k as u32),
                    &edges,
                ))
            };
            let base = gasket::edge_commutator_norm(&f, &edges);
            let probe = lip_probe("gasket", f.label(), horizon as usize, norm_at, |_| Ok(base))?;
            let assertions = ratios(&probe.norms)
                .into_iter()
                .enumerate()
                .map(|(k, r)| Assertion::near(format!("ratio k={}", k + 1), r, 0.5, 1e-12))
                .collect();
            Ok(lip_outcome(
                probe,
                json!({ "edges": edges.len() }),
                assertions,
                echo,
            ))
        }
        Model::Nat => Err(config("lip needs one of torus, rotation, uhf, gasket")),
    }
}

pub fn scaling(a: &ScalingArgs, echo: Value) -> CliResult<Outcome> {
    let m = &a.model;
    match m.model {
        Model::Uhf => {
            let params = UhfParams::new(m.r, m.s, a.lo, a.hi)?;
            if !(a.lo..=a.hi).contains(&0) {
                return Err(config("the window must contain position 0"));
            }
            let k_max = a.k_max.unwrap_or((-a.lo) as u32);
            let f = WindowElement::matrix_unit(m.r, 0, 0, 0)?;
            let reports = (1..=k_max as i64)
                .map(|k| uhf::scaling_check(&params, &f, k))
                .collect::<nclab_core::Result<Vec<_>>>()?;
            let assertions = reports
                .iter()
                .map(|r| Assertion {
                    name: format!("ratio k={}", r.k),
                    passed: r.passed,
                    value: r.ratio,
                    expected: r.expected,
                    tolerance: 1e-9 * r.expected,
                })
                .collect();
            Ok(Outcome::json(Report::new(
                echo,
                json!({ "dim": params.dim(), "reports": reports }),
                assertions,
            )))
        }
        Model::Gasket => {
            let depth = m.depth.unwrap_or(6);
            let k_max = a.k_max.unwrap_or(3);
            let mut reports = Vec::new();
            for f in [
                GasketFunction::x_coordinate(),
                GasketFunction::y_coordinate(),
            ] {
                for k in 1..=k_max {
                    reports.push(gasket::pullback_scaling_check(&f, k, m.out_level, depth)?);
                }
            }
            let assertions = reports
                .iter()
                .map(|r| {
                    Assertion::near(
                        format!("{} k={}", r.function, r.k),
                        r.ratio,
                        r.expected,
                        1e-12,
                    )
                })
                .collect();
            Ok(Outcome::json(Report::new(
                echo,
                json!({ "reports": reports }),
                assertions,
            )))
        }
        _ => Err(config("scaling needs the uhf or gasket model")),
    }
}

fn covariance_assertions(
    blocks: Vec<ComplexMatrix>,
    alpha: &[ComplexMatrix],
    results: &mut serde_json::Map<String, Value>,
) -> CliResult<Vec<Assertion>> {
    let t = CovariantTruncation::new(blocks)?;
    let rep = check_covariance(&t, alpha)?;
    results.insert("covariance".into(), json!(rep));
    Ok(vec![Assertion::below(
        "interior covariance defect",
        rep.max_interior(),
        COVARIANCE_TOL,
    )])
}

pub fn covariance(a: &CovarianceArgs, echo: Value) -> CliResult<Outcome> {
    let m = &a.model;
    let mut rng = ChaCha8Rng::seed_from_u64(a.common.seed);
    let mut results = serde_json::Map::new();
    let cutoff = a
        .cutoff
        .unwrap_or(if m.model == Model::Uhf { 2 } else { 3 });
    let mut assertions = match m.model {
        Model::Torus => {
            let b = covering(m, 2, "1,1;-1,1")?;
            let p = b.dim();
            let mut second = vec![0i64; p];
            second[0] = 2;
            second[p - 1] -= 1;
            let mut first = vec![0i64; p];
            first[0] = 1;
            let el = TorusElement::from_modes(
                p,
                &[
                    (first, Complex64::new(1.0, 0.0)),
                    (second, Complex64::new(0.5, 0.25)),
                ],
            )?;
            let pts: Vec<Vec<f64>> = (0..a.samples)
                .map(|_| (0..p).map(|_| rng.gen()).collect())
                .collect();
            let (blocks, alpha) = torus::covariant_blocks(&b, &el, cutoff, &pts)?;
            covariance_assertions(blocks, &alpha, &mut results)?
        }
        Model::Rotation => {
            let params = rotation::build_generators(m.p_theta, m.q)?;
            let b = covering(m, 2, "")?;
            let x = NCMonomialSum::monomial(1, 0).plus(&NCMonomialSum::monomial(-1, 1));
            let pts: Vec<[f64; 2]> = (0..a.samples).map(|_| [rng.gen(), rng.gen()]).collect();
            let (blocks, alpha) = rotation::covariant_blocks(&params, &b, &x, cutoff, &pts)?;
            covariance_assertions(blocks, &alpha, &mut results)?
        }
        Model::Uhf => {
            let params = UhfParams::new(m.r, m.s, -(cutoff as i64), 1)?;
            let el = WindowElement::matrix_unit(m.r, 0, 0, 1.min(m.r - 1))?;
            let (blocks, alpha) = uhf::covariant_blocks(&params, &el, cutoff)?;
            let t = CovariantTruncation::new(blocks.clone())?;
            let rep = block_commutator_check(&uhf::window_dirac(&params)?, &t)?;
            results.insert("block_commutator".into(), json!(rep));
            let mut out = covariance_assertions(blocks, &alpha, &mut results)?;
            out.push(Assertion::near(
                "block commutator",
                rep.full_norm,
                rep.block_max,
                1e-9,
            ));
            out
        }
        Model::Gasket => {
            let level = (cutoff as u32).max(2);
            let scale = 2f64.powi(level as i32);
            let pts: Vec<LatticePoint> = random_gasket_points(&mut rng, a.samples, 30)
                .into_iter()
                .map(|p| p.scale(scale))
                .collect();
            let f = GasketFunction::new("x²+y/2", |p| p[0] * p[0] + 0.5 * p[1]);
            let (blocks, alpha) = gasket::covariant_blocks(&f, cutoff as u32, level, &pts)?;
            covariance_assertions(blocks, &alpha, &mut results)?
        }
        Model::Nat => {
            return Err(config(
                "covariance needs one of torus, rotation, uhf, gasket",
            ))
        }
    };
    let gamma = clifford_generators(2)?
        .chirality()
        .ok_or_else(|| config("no chirality in rank 2"))?;
    let graded = graded_shift_commutator_norm(&gamma, cutoff.max(1))?;
    results.insert("graded_shift_norm".into(), json!(graded));
    assertions.push(Assertion::below(
        "graded shift commutator",
        graded,
        1.0 + 1e-12,
    ));
    Ok(Outcome::json(Report::new(
        echo,
        Value::Object(results),
        assertions,
    )))
}

pub fn rewrite(a: &RewriteArgs, echo: Value) -> CliResult<Outcome> {
    let angle: Angle = a.theta.parse()?;
    let word = parse_word(&a.word)?;
    let (normal, steps) = normalize_with(&word, angle, |_| 0);
    let mut rng = ChaCha8Rng::seed_from_u64(a.common.seed);
    let disagreements = (0..a.strategies)
        .filter(|_| {
            let mut r = ChaCha8Rng::seed_from_u64(rng.gen());
            normalize_with(&word, angle, |opts| r.gen_range(0..opts.len())).0 != normal
        })
        .count();
    let margin = word.letters.len();
    let n = a.cutoff;
    let deviation = if n > margin {
        let raw = normal.to_raw();
        interior_columns(0, n - margin, n - margin, n)
            .into_iter()
            .map(|col| {
                match (
                    apply_word(&word, angle, n, n, col),
                    apply_word(&raw, angle, n, n, col),
                ) {
                    (Some((i, x)), Some((j, y))) if i == j => (x - y).norm_sqr(),
                    (Some((_, x)), Some((_, y))) => x.norm_sqr() + y.norm_sqr(),
                    (Some((_, x)), None) | (None, Some((_, x))) => x.norm_sqr(),
                    (None, None) => 0.0,
                }
            })
            .sum::<f64>()
            .sqrt()
    } else {
        0.0
    };
    let text = normal.to_string();
    let results = json!({
        "input": a.word,
        "normal_form": text,
        "steps": steps,
        "strategies": a.strategies,
        "oracle_cutoff": n,
        "oracle_deviation": deviation,
    });
    let assertions = vec![
        Assertion::near("strategy disagreements", disagreements as f64, 0.0, 0.0),
        Assertion::below("oracle deviation", deviation, 1e-8),
    ];
    Ok(Outcome {
        report: Report::new(echo, results, assertions),
        text: Some(text),
    })
}

pub fn gasket_cover(a: &GasketCoverArgs, echo: Value) -> CliResult<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.common.seed);
    let pts = random_gasket_points(&mut rng, a.samples, a.address_len);
    let rep = gasket::covering_check(&pts, a.n_max)?;
    let mut results = json!({ "covering": rep });
    if let Some(path) = &a.edges_csv {
        let edges = gasket::enumerate_edges(a.out_level, a.depth)?;
        gasket::write_edges_csv(&edges, BufWriter::new(File::create(path)?))?;
        results["edges"] = json!(edges.len());
    }
    let assertions = vec![Assertion::below(
        "max covering defect",
        rep.max_defect(),
        1e-9,
    )];
    Ok(Outcome::json(Report::new(echo, results, assertions)))
}
