//! The nonlinear term `g`, its derivative, the difference quotient `g_hat`,
//! Hölder data and the growth and threshold formulas built on them.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::wave::SpaceTimeField;

/// Names accepted by [`Nonlinearity::builtin`].
pub const BUILTINS: [&str; 5] = ["zero", "linear", "sine", "logsq", "neglogcube"];

/// Below this magnitude `g_hat` switches to its Taylor expansion at zero.
pub const HATG_TAYLOR_WINDOW: f64 = 1e-8;

const CURVATURE_STEP: f64 = 1e-4;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Family {
    Zero,
    /// `g = b x`
    Linear { b: f64 },
    /// `g = a sin x`
    Sine { a: f64 },
    /// `g = beta_hat x ln^2(1 + |x|)`
    LogSq { beta_hat: f64 },
    /// `g = -a x ln^3(1 + |x|)`; super-critical growth with the bad sign.
    NegLogCube { a: f64 },
    Custom { name: String, g: ScalarFn, gprime: ScalarFn },
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Zero => write!(f, "Zero"),
            Family::Linear { b } => write!(f, "Linear({b})"),
            Family::Sine { a } => write!(f, "Sine({a})"),
            Family::LogSq { beta_hat } => write!(f, "LogSq({beta_hat})"),
            Family::NegLogCube { a } => write!(f, "NegLogCube({a})"),
            Family::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

/// Constants of `|g'(x)| <= alpha + beta ln^2(1 + |x|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Growth {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone)]
pub struct Nonlinearity {
    family: Family,
    s: f64,
    holder_seminorm: f64,
    /// `true` when `holder_seminorm` comes from sampling (a lower bound).
    holder_estimated: bool,
    growth: Option<Growth>,
}

fn log1p_abs(x: f64) -> f64 {
    x.abs().ln_1p()
}

fn logsq_g(x: f64) -> f64 {
    let l = log1p_abs(x);
    x * l * l
}

fn logsq_gprime(x: f64) -> f64 {
    let a = x.abs();
    let l = a.ln_1p();
    l * l + 2.0 * a * l / (1.0 + a)
}

fn logsq_gsecond(x: f64) -> f64 {
    let a = x.abs();
    let l = a.ln_1p();
    let v = 2.0 * l / (1.0 + a) + 2.0 * (l + a) / ((1.0 + a) * (1.0 + a));
    v.copysign(x)
}

fn logcube_gprime(x: f64) -> f64 {
    let a = x.abs();
    let l = a.ln_1p();
    l * l * l + 3.0 * a * l * l / (1.0 + a)
}

/// `sup |g''|` for `x ln^2(1+|x|)`, by a scan and golden refinement.
fn logsq_lipschitz() -> f64 {
    let f = |x: f64| logsq_gsecond(x).abs();
    let n = 20_000;
    let hi = 20.0;
    let (mut best_x, mut best) = (0.0, 0.0);
    for i in 0..=n {
        let x = hi * i as f64 / n as f64;
        if f(x) > best {
            best = f(x);
            best_x = x;
        }
    }
    let step = hi / n as f64;
    let (x, v) = golden_max(f, (best_x - step).max(0.0), best_x + step, 1e-12);
    let _ = x;
    v.max(best)
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    while b - a > tol {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

impl Nonlinearity {
    pub fn zero() -> Self {
        Self::from_parts(Family::Zero, 1.0, 0.0, false, Some(Growth { alpha: 0.0, beta: 0.0 }))
    }

    pub fn linear(b: f64) -> Self {
        Self::from_parts(
            Family::Linear { b },
            1.0,
            0.0,
            false,
            Some(Growth { alpha: b.abs(), beta: 0.0 }),
        )
    }

    pub fn sine(a: f64) -> Self {
        Self::from_parts(
            Family::Sine { a },
            1.0,
            a.abs(),
            false,
            Some(Growth { alpha: a.abs(), beta: 0.0 }),
        )
    }

    /// `alpha = beta_hat / 8`, `beta = 9 beta_hat`: the smallest `alpha` for
    /// which `l^2 + 2 l <= alpha/beta_hat + 9 l^2` for all `l >= 0`.
    pub fn logsq(beta_hat: f64) -> Self {
        let b = beta_hat.abs();
        Self::from_parts(
            Family::LogSq { beta_hat },
            1.0,
            b * logsq_lipschitz(),
            false,
            Some(Growth { alpha: b / 8.0, beta: 9.0 * b }),
        )
    }

    /// No growth constants: `|g'|` grows like `ln^3`. The Hölder value is a
    /// sampled estimate on `[-10, 10]`.
    pub fn neglogcube(a: f64) -> Self {
        let mut nl = Self::from_parts(Family::NegLogCube { a }, 1.0, 0.0, true, None);
        nl.holder_seminorm = nl.estimate_holder_seminorm((-10.0, 10.0), 1.0, 2001);
        nl
    }

    /// A user-supplied `g`; the Hölder seminorm is sampled on `[-10, 10]`.
    pub fn custom(name: impl Into<String>, g: ScalarFn, gprime: ScalarFn, s: f64) -> Self {
        let family = Family::Custom {
            name: name.into(),
            g,
            gprime,
        };
        let mut nl = Self::from_parts(family, s.clamp(0.0, 1.0), 0.0, true, None);
        nl.holder_seminorm = nl.estimate_holder_seminorm((-10.0, 10.0), nl.s, 2001);
        nl
    }

    /// Builtin family by name. `params` holds the amplitude where one is needed.
    pub fn builtin(name: &str, params: &[f64]) -> Result<Self> {
        let need = |n: usize| -> Result<f64> {
            if params.len() != n {
                return Err(Error::validation(
                    "nonlinearity.params",
                    format!("`{name}` takes {n} parameter(s), got {}", params.len()),
                ));
            }
            let v = params.first().copied().unwrap_or(0.0);
            if !v.is_finite() {
                return Err(Error::validation("nonlinearity.params", "must be finite"));
            }
            Ok(v)
        };
        match name.to_ascii_lowercase().as_str() {
            "zero" => need(0).map(|_| Self::zero()),
            "linear" => need(1).map(Self::linear),
            "sine" => need(1).map(Self::sine),
            "logsq" => need(1).map(Self::logsq),
            "neglogcube" => need(1).map(Self::neglogcube),
            _ => Err(Error::validation(
                "nonlinearity.family",
                format!("unknown family `{name}`; builtins are {}", BUILTINS.join(", ")),
            )),
        }
    }

    fn from_parts(
        family: Family,
        s: f64,
        holder_seminorm: f64,
        holder_estimated: bool,
        growth: Option<Growth>,
    ) -> Self {
        Nonlinearity {
            family,
            s,
            holder_seminorm,
            holder_estimated,
            growth,
        }
    }

    /// Replaces the declared Hölder exponent. For `s = 0` the seminorm
    /// becomes `2 sup |g'|` over `[-100, 100]`, and the growth constants
    /// become `(sup |g'|, 0)`.
    pub fn with_exponent(mut self, s: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::validation("nonlinearity.s", "must lie in [0, 1]"));
        }
        self.s = s;
        if s == 0.0 {
            let sup = self.sup_abs_gprime((-100.0, 100.0), 20_001);
            self.holder_seminorm = 2.0 * sup;
            self.holder_estimated = true;
            self.growth = Some(Growth { alpha: sup, beta: 0.0 });
        } else if s != 1.0 || self.holder_estimated {
            self.holder_seminorm = self.estimate_holder_seminorm((-10.0, 10.0), s, 2001);
            self.holder_estimated = true;
        }
        Ok(self)
    }

    /// Overrides the Hölder seminorm with a declared value.
    pub fn with_holder_seminorm(mut self, value: f64) -> Result<Self> {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::validation("nonlinearity.holder", "must be finite and >= 0"));
        }
        self.holder_seminorm = value;
        self.holder_estimated = false;
        Ok(self)
    }

    pub fn with_growth(mut self, growth: Growth) -> Result<Self> {
        if !(growth.alpha >= 0.0 && growth.beta >= 0.0)
            || !(growth.alpha.is_finite() && growth.beta.is_finite())
        {
            return Err(Error::validation("nonlinearity.alpha", "alpha and beta must be finite and >= 0"));
        }
        self.growth = Some(growth);
        Ok(self)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn name(&self) -> String {
        match &self.family {
            Family::Zero => "zero".into(),
            Family::Linear { .. } => "linear".into(),
            Family::Sine { .. } => "sine".into(),
            Family::LogSq { .. } => "logsq".into(),
            Family::NegLogCube { .. } => "neglogcube".into(),
            Family::Custom { name, .. } => name.clone(),
        }
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn holder_seminorm(&self) -> f64 {
        self.holder_seminorm
    }

    pub fn holder_is_estimate(&self) -> bool {
        self.holder_estimated
    }

    pub fn growth(&self) -> Option<Growth> {
        self.growth
    }

    pub fn g(&self, x: f64) -> f64 {
        match &self.family {
            Family::Zero => 0.0,
            Family::Linear { b } => b * x,
            Family::Sine { a } => a * x.sin(),
            Family::LogSq { beta_hat } => beta_hat * logsq_g(x),
            Family::NegLogCube { a } => {
                let l = log1p_abs(x);
                -a * x * l * l * l
            }
            Family::Custom { g, .. } => g(x),
        }
    }

    pub fn gprime(&self, x: f64) -> f64 {
        match &self.family {
            Family::Zero => 0.0,
            Family::Linear { b } => *b,
            Family::Sine { a } => a * x.cos(),
            Family::LogSq { beta_hat } => beta_hat * logsq_gprime(x),
            Family::NegLogCube { a } => -a * logcube_gprime(x),
            Family::Custom { gprime, .. } => gprime(x),
        }
    }

    pub fn g0(&self) -> f64 {
        self.g(0.0)
    }

    /// `(g(x) - g(0)) / x`, continued by `g'(0) + g''(0) x / 2` near zero.
    pub fn hatg(&self, x: f64) -> f64 {
        match self.family {
            Family::Zero => return 0.0,
            Family::Linear { b } => return b,
            _ => {}
        }
        if x.abs() < HATG_TAYLOR_WINDOW {
            let h = CURVATURE_STEP;
            let curvature = (self.gprime(h) - self.gprime(-h)) / (2.0 * h);
            self.gprime(0.0) + 0.5 * curvature * x
        } else {
            (self.g(x) - self.g0()) / x
        }
    }

    pub fn eval_g(&self, field: &SpaceTimeField) -> SpaceTimeField {
        field.map(|v| self.g(v))
    }

    pub fn eval_gprime(&self, field: &SpaceTimeField) -> SpaceTimeField {
        field.map(|v| self.gprime(v))
    }

    pub fn eval_hatg(&self, field: &SpaceTimeField) -> SpaceTimeField {
        field.map(|v| self.hatg(v))
    }

    fn sup_abs_gprime(&self, range: (f64, f64), samples: usize) -> f64 {
        uniform(range, samples)
            .map(|x| self.gprime(x).abs())
            .fold(0.0, f64::max)
    }

    /// `max |g'(a) - g'(b)| / |a - b|^s` over all pairs of a uniform grid of
    /// `samples` points on `range`: a lower bound on `[g']_s`.
    ///
    /// `s = 0` returns `2 max |g'|` on the grid; `s` above 1 is clamped.
    pub fn estimate_holder_seminorm(&self, range: (f64, f64), s: f64, samples: usize) -> f64 {
        if s <= 0.0 {
            return 2.0 * self.sup_abs_gprime(range, samples);
        }
        let s = s.min(1.0);
        let pts: Vec<(f64, f64)> = uniform(range, samples).map(|x| (x, self.gprime(x))).collect();
        let mut best = 0.0f64;
        for (i, &(a, ga)) in pts.iter().enumerate() {
            for &(b, gb) in &pts[i + 1..] {
                let d = (b - a).abs();
                if d > 0.0 {
                    best = best.max((ga - gb).abs() / d.powf(s));
                }
            }
        }
        best
    }

    /// Checks `|g'(x)| <= alpha + beta ln^2(1+|x|)` on `samples` points spread
    /// uniformly in `asinh(x)` over `range`.
    pub fn growth_check(&self, range: (f64, f64), samples: usize) -> GrowthReport {
        let Some(growth) = self.growth else {
            return GrowthReport {
                declared: false,
                passed: false,
                worst_margin: f64::NEG_INFINITY,
                worst_at: f64::NAN,
            };
        };
        let (lo, hi) = (range.0.asinh(), range.1.asinh());
        let mut worst_margin = f64::INFINITY;
        let mut worst_at = range.0;
        for u in uniform((lo, hi), samples) {
            let x = u.sinh();
            let l = log1p_abs(x);
            let margin = growth.alpha + growth.beta * l * l - self.gprime(x).abs();
            if margin < worst_margin {
                worst_margin = margin;
                worst_at = x;
            }
        }
        GrowthReport {
            declared: true,
            // relative slack for rounding in the evaluation of g'
            passed: worst_margin >= -1e-12 * (1.0 + growth.alpha),
            worst_margin,
            worst_at,
        }
    }
}

fn uniform(range: (f64, f64), samples: usize) -> impl Iterator<Item = f64> {
    let n = samples.max(2);
    let (lo, hi) = range;
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthReport {
    /// `false` when the nonlinearity carries no growth constants.
    pub declared: bool,
    pub passed: bool,
    /// `min (alpha + beta ln^2(1+|x|) - |g'(x)|)` over the samples.
    pub worst_margin: f64,
    pub worst_at: f64,
}

/// `beta0(s) = s^2 / (C^2 (2s+1)^2)`, with `beta0(0) = 0`.
pub fn threshold_beta0(s: f64, c: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    s * s / (c * c * (2.0 * s + 1.0) * (2.0 * s + 1.0))
}

/// Rate constant `c` and iteration count `k0` after which the descent is of
/// order `1 + s`, evaluated with an empirical observability constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub c: f64,
    /// `None` when no finite count follows (`s = 0` with `c >= 1`, or
    /// growth constants missing).
    pub k0: Option<u64>,
}

/// `c = [g']_s C^{2+s} e^{(1+s) C sqrt(alpha)} (1+M)^{(1+s) C sqrt(beta)}`.
///
/// For `s = 0`, `alpha = [g']_0 / 2 = sup |g'|` and `beta = 0`.
pub fn rate_constant(nl: &Nonlinearity, c_emp: f64, m_bound: f64) -> f64 {
    let s = nl.s();
    let (alpha, beta) = if s == 0.0 {
        (0.5 * nl.holder_seminorm(), 0.0)
    } else {
        match nl.growth() {
            Some(g) => (g.alpha, g.beta),
            None => return f64::INFINITY,
        }
    };
    nl.holder_seminorm()
        * c_emp.powf(2.0 + s)
        * ((1.0 + s) * c_emp * alpha.sqrt()).exp()
        * (1.0 + m_bound).powf((1.0 + s) * c_emp * beta.sqrt())
}

/// `k0 = 0` if `(1+s) c E0^{s/2} < 1`, else
/// `floor((1+s)^{1+1/s} / s (c^{1/s} sqrt(E0) - 1)) + 1`.
pub fn iteration_count(c: f64, s: f64, e0: f64) -> Option<u64> {
    if !c.is_finite() {
        return None;
    }
    if e0 == 0.0 || (1.0 + s) * c * e0.powf(0.5 * s) < 1.0 {
        return Some(0);
    }
    if s <= 0.0 {
        return None;
    }
    let v = (1.0 + s).powf(1.0 + 1.0 / s) / s * (c.powf(1.0 / s) * e0.sqrt() - 1.0);
    if !v.is_finite() || v >= u64::MAX as f64 {
        return None;
    }
    Some(v.max(0.0).floor() as u64 + 1)
}

pub fn predict_constants(nl: &Nonlinearity, c_emp: f64, e0: f64, m_bound: f64) -> Prediction {
    let c = rate_constant(nl, c_emp, m_bound);
    Prediction {
        c,
        k0: iteration_count(c, nl.s(), e0),
    }
}

/// Upper bound on `sqrt(E(y0, f0))` from the growth condition:
/// `|(y0,f0)|_H + T |g(0)| + T (alpha + beta ln^2(1 + |y0|_inf)) |y0|_inf`.
pub fn initial_error_bound(
    nl: &Nonlinearity,
    pair_norm: f64,
    horizon: f64,
    y_inf: f64,
) -> Option<f64> {
    let growth = nl.growth()?;
    let l = y_inf.ln_1p();
    Some(
        pair_norm
            + horizon * nl.g0().abs()
            + horizon * (growth.alpha + growth.beta * l * l) * y_inf,
    )
}
