//! Seeded runs of the lemma probes, reported as `probe,parameters,constant`
//! rows.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::errors::{Error, Result};
use crate::exponent::ExponentSpec;
use crate::fem::{FeSpace, SineProduct};
use crate::geometry::Domain;
use crate::interp::Interpolator;
use crate::lpx::{
    dyadic_sweep, key_estimate_probe, poincare_shift_probe, shifted_key_probe, Cube, GridFunction, TrigPolynomial,
    DEFAULT_RESOLUTION,
};
use crate::mesh::Triangulation;
use crate::nfunction::probes::{
    change_of_shift, conjugate_shift, double_shift, hammer_envelope, log_grid, shift_equivalence, shifted_index,
    young_scan, Envelope,
};
use crate::nfunction::{PhiFamily, PowerNFunction};

fn default_kappas() -> Vec<f64> {
    vec![0.0, 1e-3, 1.0]
}

fn default_draws() -> usize {
    10_000
}

fn default_p_range() -> [f64; 2] {
    [1.5, 3.0]
}

fn default_delta() -> f64 {
    0.1
}

fn default_levels() -> [u32; 2] {
    [1, 6]
}

fn default_m() -> f64 {
    2.0
}

fn default_anchor() -> [f64; 2] {
    [0.3, 0.6]
}

fn default_shifts() -> Vec<f64> {
    vec![0.0, 0.5, 1.0]
}

fn default_terms() -> usize {
    4
}

fn default_max_frequency() -> u32 {
    1
}

fn default_mesh_sizes() -> Vec<usize> {
    vec![4, 8, 16, 32]
}

/// Which inequality a cube sweep measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KeyEstimate {
    Jensen,
    ShiftedJensen,
    Poincare,
}

/// One probe run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProbeSpec {
    /// The three monotonicity ratios over random draws.
    Hammer {
        #[serde(default = "default_p_range")]
        p_range: [f64; 2],
        #[serde(default = "default_kappas")]
        kappas: Vec<f64>,
        #[serde(default = "default_draws")]
        draws: usize,
    },
    /// Worst `gap/(1+st)` of the shifted Young inequality.
    Young {
        p: f64,
        #[serde(default)]
        kappa: f64,
    },
    ShiftEquivalence {
        p: f64,
        #[serde(default)]
        kappa: f64,
    },
    DoubleShift {
        p: f64,
        #[serde(default)]
        kappa: f64,
    },
    ChangeOfShift {
        p: f64,
        #[serde(default)]
        kappa: f64,
        #[serde(default = "default_delta")]
        delta: f64,
    },
    ConjugateShift {
        p: f64,
        #[serde(default)]
        kappa: f64,
    },
    ShiftedIndex {
        p: f64,
        #[serde(default)]
        kappa: f64,
    },
    /// Dyadic-cube sweep of a key estimate with a random trigonometric input.
    KeyEstimate {
        estimate: KeyEstimate,
        exponent: ExponentSpec,
        /// Inclusive range of dyadic levels `k`.
        #[serde(default = "default_levels")]
        levels: [u32; 2],
        #[serde(default = "default_m")]
        m: f64,
        #[serde(default = "default_anchor")]
        anchor: [f64; 2],
        /// Shift `a`; ignored by plain Jensen.
        #[serde(default)]
        shift: f64,
        #[serde(default = "default_terms")]
        terms: usize,
        #[serde(default = "default_max_frequency")]
        max_frequency: u32,
    },
    /// Stability, approximability and continuity of the quasi-interpolant.
    Interpolation {
        exponent: ExponentSpec,
        #[serde(default)]
        kappa: f64,
        #[serde(default = "default_mesh_sizes")]
        mesh_sizes: Vec<usize>,
        #[serde(default = "default_shifts")]
        shifts: Vec<f64>,
        #[serde(default = "default_m")]
        m: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRow {
    pub probe: String,
    pub parameters: String,
    pub constant: f64,
}

pub const PROBE_CSV_HEADER: &str = "probe,parameters,constant";

pub fn probes_to_csv(rows: &[ProbeRow]) -> String {
    let mut out = String::from(PROBE_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},\"{}\",{:.12e}", r.probe, r.parameters, r.constant);
    }
    out
}

fn shift_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend(log_grid(1e-3, 10.0, 9));
    g
}

fn t_grid() -> Vec<f64> {
    log_grid(1e-4, 1e2, 25)
}

fn lambda_grid() -> Vec<f64> {
    log_grid(1e-3, 1.0, 10)
}

fn rho(p: f64, kappa: f64) -> Result<PowerNFunction<f64>> {
    if !(p > 1.0 && p.is_finite()) || !(0.0..=1.0).contains(&kappa) {
        return Err(Error::Config(format!("need p > 1 and kappa in [0,1] (got p={p}, kappa={kappa})")));
    }
    Ok(PowerNFunction::new(1.0, kappa, p))
}

fn envelope_rows(rows: &mut Vec<ProbeRow>, probe: &str, params: &str, name: &str, env: &Envelope<f64>) {
    for (stat, v) in [("min", env.min), ("max", env.max)] {
        rows.push(ProbeRow { probe: probe.into(), parameters: format!("{params};{name};{stat}"), constant: v });
    }
}

impl ProbeSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProbeSpec::Hammer { .. } => "hammer",
            ProbeSpec::Young { .. } => "young",
            ProbeSpec::ShiftEquivalence { .. } => "shift-equivalence",
            ProbeSpec::DoubleShift { .. } => "double-shift",
            ProbeSpec::ChangeOfShift { .. } => "change-of-shift",
            ProbeSpec::ConjugateShift { .. } => "conjugate-shift",
            ProbeSpec::ShiftedIndex { .. } => "shifted-index",
            ProbeSpec::KeyEstimate { .. } => "key-estimate",
            ProbeSpec::Interpolation { .. } => "interpolation",
        }
    }

    /// Runs the probe; `seed` drives every random choice.
    pub fn run(&self, seed: u64) -> Result<Vec<ProbeRow>> {
        let name = self.name();
        let mut rows = Vec::new();
        match self {
            ProbeSpec::Hammer { p_range, kappas, draws } => {
                if kappas.is_empty() || *draws == 0 {
                    return Err(Error::Config("hammer probe needs kappas and draws".into()));
                }
                rho(p_range[0], 0.0)?;
                let env = hammer_envelope((p_range[0], p_range[1]), kappas, *draws, seed);
                let params = format!("p=[{},{}];kappas={kappas:?};draws={draws}", p_range[0], p_range[1]);
                for (i, e) in env.iter().enumerate() {
                    envelope_rows(&mut rows, name, &params, &format!("r{}", i + 1), e);
                }
            }
            ProbeSpec::Young { p, kappa } => {
                let r = rho(*p, *kappa)?;
                let values = log_grid(1e-3, 1e2, 21);
                let worst = young_scan(&r, &shift_grid(), &values, &[0.01, 0.1, 0.5, 1.0]);
                rows.push(ProbeRow {
                    probe: name.into(),
                    parameters: format!("p={p};kappa={kappa};min_gap"),
                    constant: worst,
                });
            }
            ProbeSpec::ShiftEquivalence { p, kappa } => {
                let eq = shift_equivalence(&rho(*p, *kappa)?, &shift_grid(), &t_grid());
                let params = format!("p={p};kappa={kappa}");
                envelope_rows(&mut rows, name, &params, "small", &eq.small);
                envelope_rows(&mut rows, name, &params, "large", &eq.large);
            }
            ProbeSpec::DoubleShift { p, kappa } => {
                let ts = log_grid(1e-3, 10.0, 7);
                let env = double_shift(&rho(*p, *kappa)?, &[0.0, 0.01, 0.3, 2.0], &ts);
                envelope_rows(&mut rows, name, &format!("p={p};kappa={kappa}"), "ratio", &env);
            }
            ProbeSpec::ChangeOfShift { p, kappa, delta } => {
                if !(*delta > 0.0 && *delta <= 1.0) {
                    return Err(Error::Config(format!("delta must lie in (0,1] (got {delta})")));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let vectors: Vec<[f64; 2]> = (0..12)
                    .map(|_| {
                        use rand::Rng;
                        let mag = 10f64.powf(rng.gen_range(-2.0..1.0));
                        let ang = rng.gen_range(0.0..std::f64::consts::TAU);
                        [mag * ang.cos(), mag * ang.sin()]
                    })
                    .collect();
                let (c, cc) = change_of_shift(&rho(*p, *kappa)?, *delta, &vectors, &t_grid());
                let params = format!("p={p};kappa={kappa};delta={delta}");
                rows.push(ProbeRow { probe: name.into(), parameters: format!("{params};primal"), constant: c });
                rows.push(ProbeRow { probe: name.into(), parameters: format!("{params};conjugate"), constant: cc });
            }
            ProbeSpec::ConjugateShift { p, kappa } => {
                let cs = conjugate_shift(&rho(*p, *kappa)?, &shift_grid(), &log_grid(1e-3, 10.0, 9), &lambda_grid());
                let params = format!("p={p};kappa={kappa}");
                envelope_rows(&mut rows, name, &params, "conjugate", &cs.conjugate);
                envelope_rows(&mut rows, name, &params, "scaling", &cs.scaling);
                envelope_rows(&mut rows, name, &params, "conjugate-scaling", &cs.conjugate_scaling);
            }
            ProbeSpec::ShiftedIndex { p, kappa } => {
                let (c, cc) = shifted_index(&rho(*p, *kappa)?, &shift_grid(), &t_grid(), &lambda_grid());
                let params = format!("p={p};kappa={kappa}");
                rows.push(ProbeRow { probe: name.into(), parameters: format!("{params};primal"), constant: c });
                rows.push(ProbeRow { probe: name.into(), parameters: format!("{params};conjugate"), constant: cc });
            }
            ProbeSpec::KeyEstimate { estimate, exponent, levels, m, anchor, shift, terms, max_frequency } => {
                let input = (*terms, *max_frequency);
                rows.extend(key_sweep(name, *estimate, exponent, *levels, *m, *anchor, *shift, input, seed)?);
            }
            ProbeSpec::Interpolation { exponent, kappa, mesh_sizes, shifts, m } => {
                let p = exponent.build::<f64>(Domain::UnitSquare)?;
                let phi = PhiFamily::integral(p, *kappa)?;
                let v = SineProduct { frequency: 1.0 };
                for &n in mesh_sizes {
                    let space = FeSpace::scalar(Arc::new(Triangulation::generate(Domain::UnitSquare, n)?))?;
                    let op = Interpolator::new(&space, true);
                    rows.push(ProbeRow {
                        probe: name.into(),
                        parameters: format!("n={n};l1-stability"),
                        constant: op.l1_stability_constant(&v)?,
                    });
                    for &a in shifts {
                        for (what, c) in [
                            ("stability", op.stability_probe(&phi, &v, a, *m)?),
                            ("approximability", op.approximability_probe(&phi, &v, a, *m)?),
                            ("continuity", op.continuity_probe(&phi, &v, a, *m)?),
                        ] {
                            rows.push(ProbeRow {
                                probe: name.into(),
                                parameters: format!("n={n};a={a};m={m};{what}"),
                                constant: c,
                            });
                        }
                    }
                }
            }
        }
        Ok(rows)
    }
}

#[allow(clippy::too_many_arguments)]
fn key_sweep(
    name: &str,
    estimate: KeyEstimate,
    exponent: &ExponentSpec,
    levels: [u32; 2],
    m: f64,
    anchor: [f64; 2],
    shift: f64,
    (terms, max_freq): (usize, u32),
    seed: u64,
) -> Result<Vec<ProbeRow>> {
    if levels[0] > levels[1] || terms == 0 || !(m > 0.0) {
        return Err(Error::Config("key-estimate probe needs levels[0] ≤ levels[1], terms > 0 and m > 0".into()));
    }
    let p = exponent.build::<f64>(Domain::UnitSquare)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poly = TrigPolynomial::<f64>::random(&mut rng, terms, max_freq);
    // coefficients lie in [−1,1], so |f| ≤ 1 after this scaling
    let scale = 1.0 / terms as f64;
    let res = DEFAULT_RESOLUTION;
    let coarse_bound = 1f64.max(4f64.powf(levels[0] as f64 * m));
    let values = dyadic_sweep(levels[0]..=levels[1], &anchor, |cube: &Cube<f64>| match estimate {
        KeyEstimate::Jensen => {
            let f = GridFunction::sample(cube, res, |x| scale * poly.eval(x).0);
            key_estimate_probe(&p, cube, &f, m)
        }
        KeyEstimate::ShiftedJensen => {
            let f = GridFunction::sample(cube, res, |x| scale * poly.eval(x).0);
            shifted_key_probe(&p, cube, &f, shift, m)
        }
        KeyEstimate::Poincare => {
            // |∇u| ≤ 2π·k_max·√2·Σ|c|; saturate admissibility on the coarsest cube
            let grad_bound = std::f64::consts::TAU * f64::from(max_freq.max(1)) * 2f64.sqrt();
            let s = scale * (coarse_bound - shift).max(0.0) / grad_bound;
            let u = GridFunction::sample_with_gradient(cube, res, |x| {
                let (v, g) = poly.eval(x);
                (s * v, [s * g[0], s * g[1]])
            });
            poincare_shift_probe(&p, cube, &u, shift, m)
        }
    })?;
    let tag = match estimate {
        KeyEstimate::Jensen => "jensen",
        KeyEstimate::ShiftedJensen => "shifted-jensen",
        KeyEstimate::Poincare => "poincare",
    };
    Ok(values
        .into_iter()
        .zip(levels[0]..=levels[1])
        .map(|(c, k)| ProbeRow {
            probe: name.into(),
            parameters: format!("{tag};p={};k={k};m={m};a={shift}", p.descriptor()),
            constant: c,
        })
        .collect())
}

/// Runs every probe with the same seed, in order.
pub fn run_probes(specs: &[ProbeSpec], seed: u64) -> Result<Vec<ProbeRow>> {
    let mut rows = Vec::new();
    for s in specs {
        rows.extend(s.run(seed)?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_of(rows: &[ProbeRow], needle: &str) -> f64 {
        rows.iter().find(|r| r.parameters.contains(needle)).map(|r| r.constant).unwrap()
    }

    #[test]
    fn hammer_at_quadratic_growth() {
        let rows = ProbeSpec::Hammer { p_range: [2.0, 2.0], kappas: vec![0.0], draws: 200 }.run(1).unwrap();
        assert_eq!(rows.len(), 6);
        for (ratio, expected) in [("r1", 1.0), ("r2", 2.0), ("r3", 1.0)] {
            for stat in ["min", "max"] {
                let c = constant_of(&rows, &format!("{ratio};{stat}"));
                assert!((c - expected).abs() < 1e-10, "{ratio} {stat} = {c}");
            }
        }
    }

    #[test]
    fn constant_exponent_jensen_bound() {
        let spec = ProbeSpec::KeyEstimate {
            estimate: KeyEstimate::Jensen,
            exponent: ExponentSpec::Constant { p: 2.5 },
            levels: [1, 4],
            m: 2.0,
            anchor: default_anchor(),
            shift: 0.0,
            terms: 4,
            max_frequency: 1,
        };
        let rows = spec.run(7).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.constant <= 1.0 + 1e-6));
    }

    #[test]
    fn same_seed_same_csv() {
        let specs = vec![
            ProbeSpec::Hammer { p_range: [1.5, 3.0], kappas: vec![0.0, 1e-3], draws: 300 },
            ProbeSpec::ChangeOfShift { p: 1.7, kappa: 0.0, delta: 0.1 },
        ];
        let a = probes_to_csv(&run_probes(&specs, 11).unwrap());
        let b = probes_to_csv(&run_probes(&specs, 11).unwrap());
        assert_eq!(a, b);
        assert!(a.starts_with(PROBE_CSV_HEADER));
    }

    #[test]
    fn bad_parameters_are_config_errors() {
        assert!(matches!(ProbeSpec::Young { p: 0.5, kappa: 0.0 }.run(0), Err(Error::Config(_))));
        let bad = ProbeSpec::ChangeOfShift { p: 2.0, kappa: 0.0, delta: 3.0 };
        assert!(matches!(bad.run(0), Err(Error::Config(_))));
    }

    #[test]
    fn spec_round_trips_through_json() {
        let json = r#"{"kind":"key-estimate","estimate":"poincare","exponent":{"kind":"constant","p":2.0}}"#;
        let spec: ProbeSpec = serde_json::from_str(json).unwrap();
        assert!(matches!(spec, ProbeSpec::KeyEstimate { estimate: KeyEstimate::Poincare, .. }));
        assert!(serde_json::from_str::<ProbeSpec>(r#"{"kind":"young","p":2.0,"bogus":1}"#).is_err());
    }
}
