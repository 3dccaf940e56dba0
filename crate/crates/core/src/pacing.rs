//! Pacing functions: the fraction of the difficulty-sorted training set that
//! is available for sampling at training step `s`.
//!
//! Every non-baseline kind starts at `delta` for `s = 0`, is non-decreasing,
//! and returns exactly 1 for `s >= T`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PacingKind {
    /// No curriculum: the whole set is always available.
    Baseline,
    Step,
    Linear,
    RootN,
    GeomProgression,
}

impl PacingKind {
    pub const ALL: [PacingKind; 5] = [
        PacingKind::Baseline,
        PacingKind::Step,
        PacingKind::Linear,
        PacingKind::RootN,
        PacingKind::GeomProgression,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PacingKind::Baseline => "baseline",
            PacingKind::Step => "step",
            PacingKind::Linear => "linear",
            PacingKind::RootN => "root_n",
            PacingKind::GeomProgression => "geom_progression",
        }
    }
}

impl fmt::Display for PacingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PacingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PacingKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown pacing function `{s}`")))
    }
}

/// Number of step groups in the three-phase step function.
pub const DEFAULT_STEP_GROUPS: usize = 3;
/// Initial available fraction.
pub const DEFAULT_DELTA: f64 = 0.33;
/// Share of the total training steps after which the full set is available.
pub const DEFAULT_CL_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacingConfig<F> {
    pub kind: PacingKind,
    /// Initial fraction, in (0, 1].
    pub delta: F,
    /// Step `T` at which the whole set becomes available.
    pub total_cl_steps: u64,
    /// Root exponent for `root_n`.
    pub n: F,
    /// Group count `S` for `step`.
    pub groups: usize,
}

impl<F: Real> PacingConfig<F> {
    pub fn new(kind: PacingKind, delta: F, total_cl_steps: u64) -> Result<Self> {
        let cfg = Self {
            kind,
            delta,
            total_cl_steps,
            n: F::one(),
            groups: DEFAULT_STEP_GROUPS,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn baseline() -> Self {
        Self {
            kind: PacingKind::Baseline,
            delta: F::one(),
            total_cl_steps: 1,
            n: F::one(),
            groups: DEFAULT_STEP_GROUPS,
        }
    }

    pub fn root(n: F, delta: F, total_cl_steps: u64) -> Result<Self> {
        Self::new(PacingKind::RootN, delta, total_cl_steps)?.with_n(n)
    }

    pub fn with_n(mut self, n: F) -> Result<Self> {
        self.n = n;
        self.validate()?;
        Ok(self)
    }

    pub fn with_groups(mut self, groups: usize) -> Result<Self> {
        self.groups = groups;
        self.validate()?;
        Ok(self)
    }

    /// `T` as a fraction of the total step budget, rounded, at least 1.
    pub fn cl_steps_for(total_steps: u64, cl_fraction: F) -> u64 {
        let t = (F::from_u64(total_steps).expect("step count") * cl_fraction)
            .round()
            .to_u64()
            .unwrap_or(0);
        t.clamp(1, total_steps.max(1))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.delta > F::zero() && self.delta <= F::one()) {
            return bad(format!("delta must lie in (0, 1], got {}", self.delta));
        }
        if self.total_cl_steps < 1 {
            return bad("T must be at least 1".into());
        }
        if self.n.is_nan() || self.n < F::one() {
            return bad(format!("n must be >= 1, got {}", self.n));
        }
        if self.groups < 2 {
            return bad(format!("step groups must be >= 2, got {}", self.groups));
        }
        Ok(())
    }

    /// Flat `key=value` block with keys `kind`, `delta`, `T`, `n`, `S`.
    pub fn to_kv(&self) -> String {
        format!(
            "kind={}\ndelta={}\nT={}\nn={}\nS={}\n",
            self.kind, self.delta, self.total_cl_steps, self.n, self.groups
        )
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut kind = None;
        let mut cfg = Self::baseline();
        cfg.delta = F::lit(DEFAULT_DELTA);
        for (i, raw) in text.lines().enumerate() {
            let raw = raw.trim();
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            let line = i + 1;
            let (key, value) = raw
                .split_once('=')
                .ok_or_else(|| Error::parse(line, "expected key=value"))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| {
                v.parse::<F>()
                    .map_err(|_| Error::parse(line, format!("bad number `{v}` for `{key}`")))
            };
            let int = |v: &str| {
                v.parse::<u64>()
                    .map_err(|_| Error::parse(line, format!("bad integer `{v}` for `{key}`")))
            };
            match key {
                "kind" => kind = Some(value.parse::<PacingKind>()?),
                "delta" => cfg.delta = num(value)?,
                "T" => cfg.total_cl_steps = int(value)?,
                "n" => cfg.n = num(value)?,
                "S" => cfg.groups = int(value)? as usize,
                other => return Err(Error::parse(line, format!("unknown key `{other}`"))),
            }
        }
        cfg.kind = kind.ok_or_else(|| Error::parse(0, "missing `kind`"))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `min(1, (s * (1 - delta^n) / T + delta^n)^(1/n))`.
fn root<F: Real>(s: F, t: F, delta: F, n: F) -> F {
    let dn = delta.powf(n);
    (s * (F::one() - dn) / t + dn).powf(n.recip()).min(F::one())
}

fn step<F: Real>(s: F, t: F, delta: F, groups: usize) -> F {
    if groups == DEFAULT_STEP_GROUPS {
        return if s <= t * F::lit(0.33) {
            delta
        } else if s <= t * F::lit(0.66) {
            F::lit(0.66).max(delta)
        } else {
            F::one()
        };
    }
    // S groups: a new group every T/S steps.
    let g = F::from_count(groups);
    for j in 1..groups {
        if s <= t * F::from_count(j) / g {
            return if j == 1 {
                delta
            } else {
                (F::from_count(j) / g).max(delta)
            };
        }
    }
    F::one()
}

pub fn pace_fraction<F: Real>(cfg: &PacingConfig<F>, s: u64) -> F {
    if cfg.kind == PacingKind::Baseline || s >= cfg.total_cl_steps {
        return F::one();
    }
    let sf = F::from_u64(s).expect("step");
    let t = F::from_u64(cfg.total_cl_steps).expect("T");
    let delta = cfg.delta;
    match cfg.kind {
        PacingKind::Baseline => F::one(),
        PacingKind::Step => step(sf, t, delta, cfg.groups),
        PacingKind::Linear => root(sf, t, delta, F::one()),
        PacingKind::RootN => root(sf, t, delta, cfg.n),
        PacingKind::GeomProgression => {
            let two = F::lit(2.0);
            let exponent = sf * (F::one().log2() - delta.log2()) / t + delta.log2();
            two.powf(exponent).min(F::one())
        }
    }
}

/// `max(1, ceil(fraction * N))`, never above `N`. Products within a relative
/// 1e-9 of an integer snap to it so that e.g. 0.33 * 100 gives 33.
pub fn available_count<F: Real>(cfg: &PacingConfig<F>, s: u64, n: usize) -> usize {
    let fraction = pace_fraction(cfg, s);
    if fraction >= F::one() {
        return n;
    }
    let x = fraction.to_f64().unwrap_or(1.0) * n as f64;
    let nearest = x.round();
    let count = if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    (count as usize).clamp(1, n.max(1))
}
