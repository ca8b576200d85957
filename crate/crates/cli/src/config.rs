use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use nondini::conformal::ConformalMap;
use nondini::hilbert::HilbertEvaluator;
use nondini::measure::MCConfig;
use nondini::modulus::ModulusSpec;
use nondini::profile::{Mode, Sequence, SmoothStep, TangentProfile};
use nondini::Smoothed;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThetaConfig {
    LogInverse,
    Power { gamma: f64 },
    Constant { value: f64 },
    Tabulated { r: Vec<f64>, theta: Vec<f64> },
}

impl ThetaConfig {
    pub fn spec(&self) -> Result<ModulusSpec<f64>> {
        Ok(match self {
            ThetaConfig::LogInverse => ModulusSpec::log_inverse(),
            ThetaConfig::Power { gamma } => ModulusSpec::power(*gamma)?,
            ThetaConfig::Constant { value } => ModulusSpec::constant(*value)?,
            ThetaConfig::Tabulated { r, theta } => ModulusSpec::tabulated(r.clone(), theta.clone())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub quad_tol: f64,
    pub tail_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quad_tol: 1e-10,
            tail_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceConfig {
    pub x_lo: f64,
    pub x_hi: f64,
    pub base_n: usize,
    pub depth: u32,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            x_lo: -2.0,
            x_hi: 4.0,
            base_n: 241,
            depth: nondini::conformal::REFINE_DEPTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub theta: ThetaConfig,
    pub mode: Mode,
    pub c_prime_target: f64,
    pub amplitudes: Sequence,
    pub jumps: Sequence,
    /// Minimum number of terms kept from infinite sequences.
    pub k: usize,
    pub beta: f64,
    pub tolerances: Tolerances,
    pub trace: TraceConfig,
    pub mc: MCConfig,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            theta: ThetaConfig::LogInverse,
            mode: Mode::C1,
            c_prime_target: PI / 4.0,
            amplitudes: Sequence::dyadic(),
            jumps: Sequence::dyadic(),
            k: 20,
            beta: 0.5,
            tolerances: Tolerances::default(),
            trace: TraceConfig::default(),
            mc: MCConfig::default(),
            output: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_prime_target > 0.0 && self.c_prime_target < PI / 2.0) {
            bail!("c_prime_target = {} must lie in (0, pi/2)", self.c_prime_target);
        }
        if self.k < 1 {
            bail!("k must be at least 1");
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            bail!("beta = {} must lie in (0, 1)", self.beta);
        }
        if !(self.tolerances.quad_tol > 0.0 && self.tolerances.tail_tol > 0.0) {
            bail!("tolerances must be positive");
        }
        let t = &self.trace;
        if !(t.x_lo < 0.0 && t.x_hi > 0.0) || t.base_n < 2 {
            bail!("trace window must contain 0 and base_n must be at least 2");
        }
        let mc = &self.mc;
        if mc.n_walkers == 0 || !(mc.wos_epsilon > 0.0) || mc.max_steps == 0 {
            bail!("mc needs n_walkers >= 1, max_steps >= 1 and wos_epsilon > 0");
        }
        Ok(())
    }

    pub fn profile(&self) -> Result<TangentProfile> {
        if matches!(&self.amplitudes, Sequence::Explicit(a) if a.is_empty()) {
            return Ok(TangentProfile::flat());
        }
        let step = match self.mode {
            Mode::C1 => {
                let sm = Smoothed::with_tolerance(self.theta.spec()?, self.beta, self.tolerances.quad_tol)?;
                Some(SmoothStep::new(sm)?)
            }
            Mode::Lipschitz => None,
        };
        let p = TangentProfile::new(self.mode, 1.0, self.amplitudes.clone(), self.jumps.clone(), step)?
            .with_c_prime(self.c_prime_target)?
            .with_truncation(self.k, self.tolerances.tail_tol)?;
        Ok(p)
    }

    pub fn map(&self) -> Result<ConformalMap> {
        let ev = Arc::new(HilbertEvaluator::new(self.profile()?));
        let tol = self.tolerances.quad_tol;
        Ok(ConformalMap::from_arc(ev).with_tolerance(1e-4 * tol, 0.1 * tol))
    }
}
