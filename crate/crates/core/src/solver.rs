//! Local solution of `i∂t u − Δ_G u = |u|² u` as `u = z + v`, `z` the free
//! evolution of the (possibly randomized) datum and `v` the fixed point of
//! the Duhamel map, plus a Strang split-step integrator used as an
//! independent cross-check.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{linear_propagate, randomize, Draw, EnsembleConfig};
use crate::spectral::{Grid, SpectralField};
use crate::stats::{cumulative_weights, simpson_weights};
use crate::{cst, to64, Complex, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Deterministic,
    Randomized,
}

/// Sign in front of the cubic term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    /// `i∂t u − Δ_G u = |u|²u`.
    Focusing,
    Defocusing,
    /// Linear flow only.
    Off,
}

impl Nonlinearity {
    pub fn gamma(&self) -> f64 {
        match self {
            Nonlinearity::Focusing => 1.0,
            Nonlinearity::Defocusing => -1.0,
            Nonlinearity::Off => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub k: f64,
    pub ell: f64,
    pub t_final: f64,
    /// Time nodes on `[0, T]`, endpoints included.
    pub n_t: usize,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Event parameter `R ≥ 1`.
    pub r: f64,
    pub mode: Mode,
    pub nonlinearity: Nonlinearity,
    pub seed: u64,
    /// Split-step steps per time-node interval.
    pub substeps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            k: 1.5,
            ell: 1.75,
            t_final: 0.01,
            n_t: 33,
            picard_tol: 1e-11,
            picard_max_iter: 80,
            r: 1.0,
            mode: Mode::Deterministic,
            nonlinearity: Nonlinearity::Focusing,
            seed: 7,
            substeps: 16,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0) {
            return Err(Error::Config("T must be positive".into()));
        }
        if self.n_t < 3 {
            return Err(Error::Config("need at least 3 time nodes".into()));
        }
        if !(self.r >= 1.0) {
            return Err(Error::Config("R must be at least 1".into()));
        }
        if self.substeps == 0 {
            return Err(Error::Config("substeps must be positive".into()));
        }
        if self.mode == Mode::Randomized && !(self.ell > 1.5 && self.ell < self.k + 0.5) {
            return Err(Error::Config(format!(
                "randomized mode needs 3/2 < ell < k + 1/2, got ell = {}, k = {}",
                self.ell, self.k
            )));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        self.t_final / (self.n_t - 1) as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_t).map(|i| i as f64 * self.step()).collect()
    }
}

/// Fields sampled on the time nodes.
#[derive(Clone, Debug)]
pub struct Trajectory<T: Real> {
    pub times: Vec<f64>,
    pub states: Vec<SpectralField<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn last(&self) -> &SpectralField<T> {
        self.states.last().expect("trajectory has nodes")
    }

    /// `sup_t ‖u(t)‖_{H^s}`.
    pub fn sup_norm(&self, s: f64) -> f64 {
        self.states
            .iter()
            .map(|u| to64(u.sobolev_norm(cst(s))))
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    /// Energy with the calibrated sign `sigma`; empty until calibrated.
    pub energy: Vec<f64>,
    pub sigma: Option<f64>,
    pub v_norm: Vec<f64>,
    pub h32_norm: Vec<f64>,
    pub picard_residuals: Vec<f64>,
    pub contraction_factors: Vec<f64>,
    pub mass_drift: f64,
    pub energy_drift: f64,
    /// Relative equation residual of `u_λ` (`λ = 2`) over that of `u`.
    pub scaling_ratio: Option<f64>,
    pub notices: Vec<String>,
}

impl SolverTrace {
    /// Largest residual ratio over the final three iterate pairs.
    pub fn final_contraction(&self) -> f64 {
        let n = self.contraction_factors.len();
        self.contraction_factors[n.saturating_sub(3)..]
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }
}

/// Relative drift `max_t |f(t) − f(0)| / max(|f(0)|, tiny)`.
pub fn relative_drift(xs: &[f64]) -> f64 {
    let Some(&f0) = xs.first() else { return 0.0 };
    let d = xs.iter().map(|x| (x - f0).abs()).fold(0.0, f64::max);
    if f0.abs() > 0.0 {
        d / f0.abs()
    } else {
        d
    }
}

pub struct Solver<T: Real> {
    pub grid: Arc<Grid<T>>,
    pub cfg: SolverConfig,
}

impl<T: Real> Solver<T> {
    pub fn new(grid: Arc<Grid<T>>, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Solver { grid, cfg })
    }

    fn gamma(&self) -> T {
        cst(self.cfg.nonlinearity.gamma())
    }

    /// `γ|w|²w`.
    pub fn nonlinearity(&self, w: &SpectralField<T>) -> SpectralField<T> {
        if self.cfg.nonlinearity == Nonlinearity::Off {
            return SpectralField::zeros(&w.grid);
        }
        w.cubic().scale_re(self.gamma())
    }

    /// `z(t_i) = e^{−it_iΔ_G} z₀` on every node.
    pub fn free_flow(&self, z0: &SpectralField<T>) -> Vec<SpectralField<T>> {
        self.cfg
            .times()
            .iter()
            .map(|&t| linear_propagate(z0, cst(t)))
            .collect()
    }

    /// `Φ(v)(t) = −i∫₀ᵗ e^{−i(t−t')Δ_G} γ|z+v|²(z+v)(t') dt'`, with the
    /// integrand pulled back to `t' = 0` before the quadrature.
    pub fn duhamel_map(
        &self,
        v: &[SpectralField<T>],
        z: &[SpectralField<T>],
    ) -> Result<Vec<SpectralField<T>>> {
        let n = self.cfg.n_t;
        if v.len() != n || z.len() != n {
            return Err(Error::Config(format!(
                "expected {n} time nodes, got {} and {}",
                v.len(),
                z.len()
            )));
        }
        let times = self.cfg.times();
        let pulled: Vec<SpectralField<T>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let w = z[j].add(&v[j])?;
                Ok(linear_propagate(&self.nonlinearity(&w), cst(-times[j])))
            })
            .collect::<Result<_>>()?;
        let weights = cumulative_weights(n, self.cfg.step());
        let minus_i = Complex::new(T::zero(), -T::one());
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut acc = SpectralField::zeros(&self.grid);
                for &(j, w) in &weights[i] {
                    acc.axpy(Complex::new(cst(w), T::zero()), &pulled[j])?;
                }
                Ok(linear_propagate(&acc, cst(times[i])).scale(minus_i))
            })
            .collect()
    }

    /// The linear datum `z₀`: `u₀` itself, or its randomization.
    pub fn linear_datum(
        &self,
        u0: &SpectralField<T>,
        draw: Option<&Draw>,
    ) -> Result<SpectralField<T>> {
        match self.cfg.mode {
            Mode::Deterministic => Ok(u0.clone()),
            Mode::Randomized => match draw {
                Some(d) => randomize(u0, d),
                None => {
                    let d = Draw::sample(&EnsembleConfig::new(self.cfg.seed, 1), 0, &u0.blocks());
                    randomize(u0, &d)
                }
            },
        }
    }

    /// Picard iteration `v_{j+1} = Φ(v_j)` from `v₀ = 0`.
    pub fn picard_solve(
        &self,
        u0: &SpectralField<T>,
        draw: Option<&Draw>,
    ) -> Result<(Trajectory<T>, SolverTrace)> {
        let z0 = self.linear_datum(u0, draw)?;
        let z = self.free_flow(&z0);
        let n = self.cfg.n_t;
        let ell = cst::<T>(self.cfg.ell);
        let mut v: Vec<SpectralField<T>> =
            (0..n).map(|_| SpectralField::zeros(&self.grid)).collect();
        let mut trace = SolverTrace {
            times: self.cfg.times(),
            ..Default::default()
        };
        let mut stalls = 0;
        for it in 0..self.cfg.picard_max_iter {
            let next = self.duhamel_map(&v, &z)?;
            let res = next
                .iter()
                .zip(&v)
                .map(|(a, b)| a.sub(b).map(|d| to64(d.sobolev_norm(ell))))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            v = next;
            if let Some(&prev) = trace.picard_residuals.last() {
                if prev > 0.0 {
                    let ratio = res / prev;
                    trace.contraction_factors.push(ratio);
                    stalls = if ratio >= 1.0 { stalls + 1 } else { 0 };
                }
            }
            trace.picard_residuals.push(res);
            if res <= self.cfg.picard_tol {
                break;
            }
            if stalls >= 3 {
                let sup = to64(u0.synthesize().lp_norm(T::infinity()));
                let suggested = (0.5 / (sup * sup)).min(0.5 * self.cfg.t_final);
                return Err(Error::NonContraction {
                    iterations: it + 1,
                    suggested_t: suggested,
                });
            }
            if it + 1 == self.cfg.picard_max_iter {
                trace.notices.push(format!(
                    "Picard stopped at the iteration cap with residual {res:.3e}"
                ));
            }
        }
        trace.v_norm = v.iter().map(|f| to64(f.sobolev_norm(ell))).collect();
        let states = z
            .iter()
            .zip(&v)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        Ok((
            Trajectory {
                times: self.cfg.times(),
                states,
            },
            trace,
        ))
    }

    /// `u ← u e^{−iγτ|u|²}` pointwise.
    fn phase_step(&self, u: &SpectralField<T>, tau: T) -> SpectralField<T> {
        let mut p = u.synthesize();
        let g = self.gamma();
        p.values.par_iter_mut().for_each(|w| {
            *w *= Complex::from_polar(T::one(), -g * tau * w.norm_sqr());
        });
        p.analyze()
    }

    /// Strang splitting sampled on the solver's time nodes. Returns the
    /// trajectory and accuracy warnings.
    pub fn splitstep_evolve(&self, u0: &SpectralField<T>) -> Result<(Trajectory<T>, Vec<String>)> {
        let z0 = self.linear_datum(u0, None)?;
        let dt = self.cfg.step() / self.cfg.substeps as f64;
        let mut warnings = Vec::new();
        let spec = self.grid.spec.clone();
        let linear_phase = dt * (2 * spec.m_max + 1) as f64 * spec.eta_max();
        if linear_phase > std::f64::consts::FRAC_PI_4 {
            warnings.push(format!(
                "linear phase per step {linear_phase:.3} exceeds pi/4"
            ));
        }
        let mut u = z0;
        let mut states = vec![u.clone()];
        let half = cst::<T>(0.5 * dt);
        let off = self.cfg.nonlinearity == Nonlinearity::Off;
        let mut warned = false;
        for _ in 1..self.cfg.n_t {
            for _ in 0..self.cfg.substeps {
                if off {
                    u = linear_propagate(&u, cst(dt));
                    continue;
                }
                if !warned {
                    let sup = to64(u.synthesize().lp_norm(T::infinity()));
                    if dt * sup * sup > std::f64::consts::FRAC_PI_4 {
                        warnings.push(format!(
                            "nonlinear phase per step {:.3} exceeds pi/4",
                            dt * sup * sup
                        ));
                        warned = true;
                    }
                }
                u = self.phase_step(&u, half);
                u = linear_propagate(&u, cst(dt));
                u = self.phase_step(&u, half);
            }
            states.push(u.clone());
        }
        Ok((
            Trajectory {
                times: self.cfg.times(),
                states,
            },
            warnings,
        ))
    }

    /// `½⟨−Δ_G u, u⟩ + σ/4 ‖u‖⁴_{L⁴}`.
    pub fn energy(&self, u: &SpectralField<T>, sigma: f64) -> f64 {
        let kinetic = to64(u.sobolev_norm_sq(T::one())) - to64(u.sobolev_norm_sq(T::zero()));
        let quartic = to64(u.synthesize().lp_norm_pow(cst(4.0)));
        0.5 * kinetic + 0.25 * sigma * quartic
    }

    /// Mass, calibrated energy, `H^{3/2}` monitor and the scaling check.
    pub fn diagnostics(&self, traj: &Trajectory<T>, trace: &mut SolverTrace) -> Result<()> {
        trace.times = traj.times.clone();
        trace.mass = traj
            .states
            .iter()
            .map(|u| to64(u.sobolev_norm_sq(T::zero())))
            .collect();
        trace.mass_drift = relative_drift(&trace.mass);
        trace.h32_norm = traj
            .states
            .iter()
            .map(|u| to64(u.sobolev_norm(cst(1.5))))
            .collect();
        let candidates: Vec<(f64, Vec<f64>)> = [1.0, -1.0]
            .iter()
            .map(|&s| (s, traj.states.iter().map(|u| self.energy(u, s)).collect()))
            .collect();
        let quartic_live = traj
            .states
            .iter()
            .any(|u| to64(u.synthesize().lp_norm_pow(cst(4.0))) > 0.0);
        if self.cfg.nonlinearity == Nonlinearity::Off || !quartic_live {
            trace
                .notices
                .push("linear run: energy sign not calibrated".into());
            trace.sigma = None;
            trace.energy.clear();
            trace.energy_drift = relative_drift(&candidates[0].1);
        } else {
            let (sigma, e) = candidates
                .into_iter()
                .min_by(|a, b| relative_drift(&a.1).total_cmp(&relative_drift(&b.1)))
                .expect("two candidates");
            trace.sigma = Some(sigma);
            trace.energy_drift = relative_drift(&e);
            trace.energy = e;
        }
        trace.scaling_ratio = self.scaling_ratio(traj)?;
        Ok(())
    }

    /// Relative residual `‖i∂t u + (−Δ_G) u − γ|u|²u‖ / ‖|u|²u‖` over the
    /// interior nodes, `∂t` by fourth-order central differences.
    fn equation_residual(&self, traj: &Trajectory<T>, step: f64) -> Result<Option<f64>> {
        let n = traj.states.len();
        if n < 5 || self.cfg.nonlinearity == Nonlinearity::Off {
            return Ok(None);
        }
        let i_unit = Complex::new(T::zero(), T::one());
        let mut worst: f64 = 0.0;
        for i in 2..n - 2 {
            let s = &traj.states;
            let mut dt = s[i - 2].sub(&s[i + 2])?;
            dt.axpy(Complex::new(cst(8.0), T::zero()), &s[i + 1])?;
            dt.axpy(Complex::new(cst(-8.0), T::zero()), &s[i - 1])?;
            let dt = dt.scale(i_unit * cst::<T>(1.0 / (12.0 * step)));
            let lap = s[i].map_diag(|m, q| {
                Complex::new(
                    cst::<T>((2 * m + 1) as f64) * s[i].grid.eta(q).abs(),
                    T::zero(),
                )
            });
            let nl = self.nonlinearity(&s[i]);
            let r = dt.add(&lap)?.sub(&nl)?;
            let den = to64(nl.sobolev_norm(T::zero()));
            if den > 0.0 {
                worst = worst.max(to64(r.sobolev_norm(T::zero())) / den);
            }
        }
        Ok(Some(worst))
    }

    /// Residual of `u_λ(t, x, y) = λ u(λ²t, λx, λ²y)`, `λ = 2`, over that of `u`.
    fn scaling_ratio(&self, traj: &Trajectory<T>) -> Result<Option<f64>> {
        let lam = 2.0;
        let Some(own) = self.equation_residual(traj, self.cfg.step())? else {
            return Ok(None);
        };
        let mut spec = self.grid.spec.clone();
        spec.eta_step *= lam * lam;
        spec.x_range /= lam;
        let grid = Grid::<T>::new(spec)?;
        let states = traj
            .states
            .iter()
            .map(|u| {
                let mut f = SpectralField::zeros(&grid);
                f.coeffs = u.coeffs.iter().map(|c| *c * cst::<T>(1.0 / lam)).collect();
                f
            })
            .collect();
        let scaled = Trajectory {
            times: traj.times.iter().map(|t| t / (lam * lam)).collect(),
            states,
        };
        let Some(theirs) = self.equation_residual(&scaled, self.cfg.step() / (lam * lam))? else {
            return Ok(None);
        };
        Ok(Some(if own > 0.0 { theirs / own } else { 0.0 }))
    }

    /// `Ĉ` such that the Picard contraction factor is about `Ĉ T (R‖u₀‖_{X^k_1})²`,
    /// and `T_auto = 1/(2Ĉ(R‖u₀‖)²)`. Recalibrates at `T_auto` until the
    /// measured factor there is at most 1/2.
    pub fn auto_time(&self, u0: &SpectralField<T>, draw: Option<&Draw>) -> Result<AutoTime> {
        let x = to64(u0.x_norm(cst(self.cfg.k), T::one()));
        if !x.is_finite() {
            return Err(Error::InfiniteNorm);
        }
        let scale = (self.cfg.r * x).powi(2);
        if scale == 0.0 {
            return Ok(AutoTime {
                t_auto: self.cfg.t_final,
                c_hat: 0.0,
                contraction: 0.0,
                rounds: 0,
            });
        }
        let mut t = self.cfg.t_final;
        let mut c_hat: f64 = 0.0;
        for round in 1..=8 {
            let mut cfg = self.cfg.clone();
            cfg.t_final = t;
            let probe = Solver {
                grid: self.grid.clone(),
                cfg,
            };
            let kappa = match probe.picard_solve(u0, draw) {
                Ok((_, tr)) => tr.contraction_factors.iter().copied().fold(0.0, f64::max),
                Err(Error::NonContraction { .. }) => 1.0,
                Err(e) => return Err(e),
            };
            if round > 1 && kappa <= 0.5 {
                return Ok(AutoTime {
                    t_auto: t,
                    c_hat,
                    contraction: kappa,
                    rounds: round,
                });
            }
            c_hat = c_hat.max(kappa / (t * scale) * if round > 1 { 1.05 } else { 1.0 });
            if c_hat == 0.0 {
                return Ok(AutoTime {
                    t_auto: t,
                    c_hat,
                    contraction: kappa,
                    rounds: round,
                });
            }
            t = 1.0 / (2.0 * c_hat * scale);
        }
        Err(Error::Config(
            "T_auto calibration did not settle in 8 rounds".into(),
        ))
    }

    /// The four good-event statistics for one draw; `probe` is the fixed
    /// `(v, w)` datum, propagated freely.
    pub fn event_statistics(
        &self,
        u0: &SpectralField<T>,
        draw: &Draw,
        probe: &SpectralField<T>,
    ) -> Result<EventStats> {
        let t = self.cfg.t_final;
        let ell = cst::<T>(self.cfg.ell);
        let x = to64(u0.x_norm(cst(self.cfg.k), T::one()));
        let z = self.free_flow(&randomize(u0, draw)?);
        let p = self.free_flow(probe);
        let w = simpson_weights(self.cfg.n_t, self.cfg.step());
        let per_node: Vec<[f64; 5]> = z
            .par_iter()
            .zip(&p)
            .map(|(zi, pi)| {
                let zz = zi.multiply(zi)?;
                let zbar_z = zi.multiply(&zi.conj())?;
                let zzz = zbar_z.multiply(zi)?;
                let zvw = zi.multiply(pi)?.multiply(pi)?;
                let sup = to64(zi.synthesize().lp_norm(T::infinity()));
                Ok([
                    to64(zz.sobolev_norm(ell)),
                    to64(zbar_z.sobolev_norm(ell)),
                    to64(zzz.sobolev_norm(ell)),
                    to64(zvw.sobolev_norm(ell)),
                    sup * sup,
                ])
            })
            .collect::<Result<_>>()?;
        let integral = |c: usize| per_node.iter().zip(&w).map(|(v, w)| v[c] * w).sum::<f64>();
        let pn = p
            .iter()
            .map(|f| to64(f.sobolev_norm(ell)))
            .fold(0.0, f64::max);
        let r = self.cfg.r;
        Ok(EventStats {
            quadratic: integral(0) + integral(1),
            quadratic_bound: t * r * r * x * x,
            cubic: integral(2),
            cubic_bound: t * r.powi(3) * x.powi(3),
            mixed: integral(3),
            mixed_bound: t * r * x * pn * pn,
            sup_sq: integral(4),
            sup_sq_bound: t * r * r * x * x,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutoTime {
    pub t_auto: f64,
    pub c_hat: f64,
    /// Largest Picard residual ratio measured at `t_auto`.
    pub contraction: f64,
    pub rounds: usize,
}

/// Left-hand sides and bounds of the good-event conditions: quadratic
/// (`‖z²‖ + ‖|z|²‖` in `L¹_T H^ℓ`), cubic, mixed `z v w`, and `‖z‖²_{L²_T L^∞}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventStats {
    pub quadratic: f64,
    pub quadratic_bound: f64,
    pub cubic: f64,
    pub cubic_bound: f64,
    pub mixed: f64,
    pub mixed_bound: f64,
    pub sup_sq: f64,
    pub sup_sq_bound: f64,
}

impl EventStats {
    pub fn holds(&self) -> [bool; 4] {
        [
            self.quadratic <= self.quadratic_bound,
            self.cubic <= self.cubic_bound,
            self.mixed <= self.mixed_bound,
            self.sup_sq <= self.sup_sq_bound,
        ]
    }
}

/// `amplitude` on every node of the building block `(2^j, m)`.
pub fn band_datum<T: Real>(
    grid: &Arc<Grid<T>>,
    j: i32,
    m: usize,
    amplitude: f64,
) -> SpectralField<T> {
    let spec = grid.spec.clone();
    SpectralField::from_fn(grid, |mm, q| {
        if mm == m && crate::grid::band_exponent(spec.eta(q)) == j {
            Complex::new(cst(amplitude), T::zero())
        } else {
            Complex::new(T::zero(), T::zero())
        }
    })
}

/// Turns a single complex64 draw value into the solver scalar.
pub fn draw_value<T: Real>(x: Complex64) -> Complex<T> {
    Complex::new(cst(x.re), cst(x.im))
}
