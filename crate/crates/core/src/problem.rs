//! Problem definition: initial condition `u0`, noise envelope `f`, the
//! diffusion coefficient `sigma(t, x, r)`, and the flat key-value config format.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::quad;

/// Named shape of a spatial profile. Each shape has peak value 1 before scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `exp(-x^2)`
    Gaussian,
    /// `exp(1 - 1/(1 - x^2))` on `|x| < 1`, zero outside
    Bump,
    /// `sech(x)`
    Sech,
    /// `exp(-|x|)`
    ExpDecay,
    Zero,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Bump => "bump",
            Family::Sech => "sech",
            Family::ExpDecay => "exp-decay",
            Family::Zero => "zero",
        }
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Family::Gaussian),
            "bump" => Ok(Family::Bump),
            "sech" => Ok(Family::Sech),
            "exp-decay" | "exp_decay" | "expdecay" => Ok(Family::ExpDecay),
            "zero" | "0" => Ok(Family::Zero),
            other => Err(format!(
                "unknown function family `{other}` (expected gaussian, bump, sech, exp-decay, zero)"
            )),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A scaled member of a named family: `scale * shape(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub family: Family,
    pub scale: f64,
}

impl Profile {
    pub fn new(family: Family, scale: f64) -> Self {
        Profile { family, scale }
    }

    pub fn unit(family: Family) -> Self {
        Profile { family, scale: 1.0 }
    }

    pub fn zero() -> Self {
        Profile { family: Family::Zero, scale: 0.0 }
    }

    pub fn is_zero(&self) -> bool {
        self.family == Family::Zero || self.scale == 0.0
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let shape = match self.family {
            Family::Gaussian => (-x * x).exp(),
            Family::Bump => {
                if x.abs() < 1.0 {
                    (1.0 - 1.0 / (1.0 - x * x)).exp()
                } else {
                    0.0
                }
            }
            Family::Sech => 1.0 / x.cosh(),
            Family::ExpDecay => (-x.abs()).exp(),
            Family::Zero => return 0.0,
        };
        self.scale * shape
    }

    /// Closed form of `int_0^x profile`, signed (negative for `x < 0`), when one exists.
    pub fn antiderivative(&self, x: f64) -> Option<f64> {
        let v = match self.family {
            Family::Gaussian => 0.5 * std::f64::consts::PI.sqrt() * libm::erf(x),
            Family::Sech => 2.0 * (0.5 * x).tanh().atan(),
            Family::ExpDecay => x.signum() * -(-x.abs()).exp_m1(),
            Family::Zero => 0.0,
            Family::Bump => return None,
        };
        Some(self.scale * v)
    }

    /// `int_0^x profile` by closed form where available, adaptive quadrature otherwise.
    pub fn integral_from_zero(&self, x: f64) -> f64 {
        if let Some(v) = self.antiderivative(x) {
            return v;
        }
        self.integral_from_zero_quad(x)
    }

    pub(crate) fn integral_from_zero_quad(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        // compact support: the bump vanishes beyond |x| = 1
        let end = match self.family {
            Family::Bump => x.clamp(-1.0, 1.0),
            _ => x,
        };
        let r = quad::gauss_kronrod(|y| self.eval(y), 0.0, end, 1e-15, 1e-13);
        r.value
    }

    pub fn sup(&self) -> f64 {
        if self.is_zero() { 0.0 } else { self.scale.abs() }
    }

    /// Hölder order of the profile (all families are Lipschitz).
    pub fn holder_order(&self) -> f64 {
        1.0
    }

    /// `int_R |profile|^p` by adaptive quadrature.
    pub fn lp_norm_pow(&self, p: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let g = |x: f64| self.eval(x).abs().powf(p);
        let r = match self.family {
            Family::Bump => quad::gauss_kronrod(g, -1.0, 1.0, 1e-16, 1e-12),
            // kink at zero for exp-decay: integrate each half separately
            _ => quad::gauss_kronrod_real_line(g, 0.0, 1e-16, 1e-12),
        };
        r.value
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        self.lp_norm_pow(p).powf(1.0 / p)
    }

    /// Fraction of `int |profile|^2` carried by `[-a, a]`.
    pub fn l2_mass_fraction(&self, a: f64) -> f64 {
        let total = self.lp_norm_pow(2.0);
        if total == 0.0 {
            return 1.0;
        }
        let inner = quad::gauss_kronrod(|x| self.eval(x).powi(2), -a, 0.0, 1e-16, 1e-12).value
            + quad::gauss_kronrod(|x| self.eval(x).powi(2), 0.0, a, 1e-16, 1e-12).value;
        (inner / total).min(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaKind {
    /// `sigma(t, x, r) = f(x)`
    Additive,
    /// `sigma(t, x, r) = f(x) g(r)` with `g(r) = lambda r / (1 + lambda |r|)`
    Multiplicative,
}

impl FromStr for SigmaKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "additive" => Ok(SigmaKind::Additive),
            "multiplicative" => Ok(SigmaKind::Multiplicative),
            other => Err(format!("unknown sigma kind `{other}` (expected additive, multiplicative)")),
        }
    }
}

/// The triple `(u0, sigma, f)` together with the norms the moment bounds use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub u0: Profile,
    pub u0_alpha: Option<f64>,
    pub sigma_kind: SigmaKind,
    pub f: Profile,
    pub q: f64,
    pub lipschitz_l: f64,
    pub f_l2: f64,
    pub f_lq: f64,
    pub u0_l1: f64,
    pub u0_linf: f64,
    /// slope of `g` at the origin; `sigma` is Lipschitz in `r` with constant `lambda * sup f`
    g_rate: f64,
}

impl ProblemSpec {
    pub fn new(
        u0: Profile,
        f: Profile,
        sigma_kind: SigmaKind,
        q: f64,
        lipschitz_l: f64,
    ) -> Result<Self> {
        if !(q > 2.0) || !q.is_finite() {
            return Err(LabError::InvalidSpec(format!("q must be finite and > 2, got {q}")));
        }
        if !(lipschitz_l >= 0.0) || !lipschitz_l.is_finite() {
            return Err(LabError::InvalidSpec(format!(
                "Lipschitz constant must be finite and >= 0, got {lipschitz_l}"
            )));
        }
        if !u0.scale.is_finite() {
            return Err(LabError::InvalidSpec("u0 is unbounded".into()));
        }
        if !f.scale.is_finite() || f.scale < 0.0 {
            return Err(LabError::InvalidSpec(format!(
                "f must be finite and non-negative, got scale {}",
                f.scale
            )));
        }
        let f = if f.scale == 0.0 { Profile::zero() } else { f };
        let u0 = if u0.scale == 0.0 { Profile::zero() } else { u0 };

        let f_l2 = f.lp_norm(2.0);
        let f_lq = f.lp_norm(q);
        if !f_l2.is_finite() || !f_lq.is_finite() {
            return Err(LabError::InvalidSpec("f has non-finite L2 or Lq norm".into()));
        }
        if !f.is_zero() && (f_l2 <= 0.0 || f_lq <= 0.0) {
            return Err(LabError::InvalidSpec("f has vanishing norm".into()));
        }
        let u0_l1 = u0.lp_norm(1.0);
        let u0_linf = u0.sup();
        if !u0_l1.is_finite() {
            return Err(LabError::InvalidSpec("u0 is not integrable".into()));
        }
        let g_rate = match sigma_kind {
            SigmaKind::Additive => 0.0,
            SigmaKind::Multiplicative if f.is_zero() => 0.0,
            SigmaKind::Multiplicative => lipschitz_l / f.sup(),
        };
        Ok(ProblemSpec {
            u0,
            u0_alpha: if u0.is_zero() { None } else { Some(u0.holder_order()) },
            sigma_kind,
            f,
            q,
            lipschitz_l,
            f_l2,
            f_lq,
            u0_l1,
            u0_linf,
            g_rate,
        })
    }

    /// Builds a spec from the `spec.*` keys of a config.
    pub fn from_config(config: &Config) -> Result<Self> {
        let u0 = config.profile("spec.u0", "spec.u0_scale")?;
        let f = config.profile("spec.f", "spec.f_scale")?;
        let q = config.get_f64("spec.q")?;
        if !(q > 2.0) {
            return Err(LabError::value("spec.q", format!("q must be > 2, got {q}")));
        }
        let kind: SigmaKind = config.get_parsed("spec.sigma_kind")?;
        let l = config.get_f64("spec.lipschitz_L")?;
        ProblemSpec::new(u0, f, kind, q, l)
    }

    pub fn f_l2_sq(&self) -> f64 {
        self.f_l2 * self.f_l2
    }

    /// `sigma(t, x, r)`; `|sigma| <= f(x)` and Lipschitz in `r` with constant `lipschitz_l`.
    #[inline]
    pub fn sigma(&self, _t: f64, x: f64, r: f64) -> f64 {
        let fx = self.f.eval(x);
        match self.sigma_kind {
            SigmaKind::Additive => fx,
            SigmaKind::Multiplicative => fx * self.g(r),
        }
    }

    #[inline]
    pub fn g(&self, r: f64) -> f64 {
        let lr = self.g_rate * r;
        lr / (1.0 + lr.abs())
    }

    /// True when sigma vanishes identically.
    pub fn is_noiseless(&self) -> bool {
        self.f.is_zero() || (self.sigma_kind == SigmaKind::Multiplicative && self.g_rate == 0.0)
    }

    /// `sigma` does not depend on the solution.
    pub fn is_additive(&self) -> bool {
        self.sigma_kind == SigmaKind::Additive || self.is_noiseless()
    }
}

/// Free-function form of [`ProblemSpec::sigma`].
pub fn sigma_eval(spec: &ProblemSpec, t: f64, x: f64, r: f64) -> f64 {
    spec.sigma(t, x, r)
}

/// Builds a spec from a parsed config.
pub fn build_spec(config: &Config) -> Result<ProblemSpec> {
    ProblemSpec::from_config(config)
}

/// Flat `key = value` config, `#` starts a comment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, (String, usize)>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(LabError::ConfigSyntax {
                    line: line_no,
                    msg: format!("expected `key = value`, got `{line}`"),
                });
            };
            let key = k.trim();
            let value = v.trim();
            if key.is_empty() {
                return Err(LabError::ConfigSyntax { line: line_no, msg: "empty key".into() });
            }
            if entries.insert(key.to_string(), (value.to_string(), line_no)).is_some() {
                return Err(LabError::ConfigSyntax {
                    line: line_no,
                    msg: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(Config { entries })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Config::parse(&text)
    }

    pub fn from_pairs<'a, I: IntoIterator<Item = (&'a str, &'a str)>>(pairs: I) -> Self {
        let entries = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (k, v))| (k.to_string(), (v.to_string(), i + 1)))
            .collect();
        Config { entries }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let line = self.entries.len() + 1;
        self.entries.insert(key.to_string(), (value.to_string(), line));
    }

    pub fn get_str(&self, key: &str) -> Result<&str> {
        self.entries
            .get(key)
            .map(|(v, _)| v.as_str())
            .ok_or_else(|| LabError::MissingKey(key.to_string()))
    }

    pub fn get_opt(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn get_parsed<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let (v, line) = self
            .entries
            .get(key)
            .ok_or_else(|| LabError::MissingKey(key.to_string()))?;
        v.parse::<T>().map_err(|e| LabError::ConfigSyntax {
            line: *line,
            msg: format!("key `{key}`: cannot parse `{v}`: {e}"),
        })
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        self.get_parsed(key)
    }

    pub fn get_usize(&self, key: &str) -> Result<usize> {
        self.get_parsed(key)
    }

    fn profile(&self, family_key: &str, scale_key: &str) -> Result<Profile> {
        let family: Family = self.get_parsed(family_key)?;
        let scale = match self.get_opt(scale_key) {
            Some(_) => self.get_f64(scale_key)?,
            None => 1.0,
        };
        Ok(Profile::new(family, scale))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, (v, _))| (k.as_str(), v.as_str()))
    }

    /// Canonical text form (sorted keys), stable across whitespace/comment edits.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.iter() {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(v);
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn gaussian_spec(kind: SigmaKind) -> ProblemSpec {
        ProblemSpec::new(Profile::unit(Family::Gaussian), Profile::unit(Family::Gaussian), kind, 4.0, 1.0)
            .unwrap()
    }

    #[test]
    fn gaussian_norms() {
        let s = gaussian_spec(SigmaKind::Additive);
        let pi = std::f64::consts::PI;
        assert!((s.u0_l1 - pi.sqrt()).abs() < 1e-8 * pi.sqrt());
        assert!((s.u0_l1 - 1.772_453_9).abs() < 1e-7);
        assert!((s.f_l2 - (pi / 2.0).powf(0.25)).abs() < 1e-8);
        // ||f||_4 = (int e^{-4x^2})^{1/4} = (sqrt(pi)/2)^{1/4}
        assert!((s.f_lq - (pi.sqrt() / 2.0).powf(0.25)).abs() < 1e-8);
        assert_eq!(s.u0_linf, 1.0);
    }

    #[test]
    fn zero_u0() {
        let s = ProblemSpec::new(Profile::zero(), Profile::unit(Family::Gaussian), SigmaKind::Additive, 4.0, 0.0)
            .unwrap();
        assert_eq!(s.u0_l1, 0.0);
        assert_eq!(s.u0_linf, 0.0);
    }

    #[test]
    fn rejects_bad_q_and_scales() {
        let cfg = Config::parse("spec.u0 = gaussian\nspec.f = gaussian\nspec.q = 2\nspec.sigma_kind = additive\nspec.lipschitz_L = 1\n")
            .unwrap();
        assert!(matches!(build_spec(&cfg), Err(LabError::ConfigValue { .. })));
        assert!(ProblemSpec::new(Profile::unit(Family::Gaussian), Profile::new(Family::Gaussian, -1.0), SigmaKind::Additive, 4.0, 1.0).is_err());
        assert!(ProblemSpec::new(Profile::new(Family::Gaussian, f64::INFINITY), Profile::unit(Family::Gaussian), SigmaKind::Additive, 4.0, 1.0).is_err());
        assert!(ProblemSpec::new(Profile::unit(Family::Gaussian), Profile::unit(Family::Gaussian), SigmaKind::Additive, 4.0, -1.0).is_err());
    }

    #[test]
    fn antiderivatives_match_quadrature() {
        for fam in [Family::Gaussian, Family::Sech, Family::ExpDecay] {
            let p = Profile::new(fam, 0.7);
            for &x in &[-3.0, -0.4, 0.0, 0.25, 1.0, 5.0] {
                let a = p.antiderivative(x).unwrap();
                let q = p.integral_from_zero_quad(x);
                assert!((a - q).abs() < 1e-11, "{fam} x={x}: {a} vs {q}");
            }
        }
    }

    #[test]
    fn norms_agree_with_brute_force_trapezoid() {
        for fam in [Family::Gaussian, Family::Bump, Family::Sech, Family::ExpDecay] {
            let p = Profile::unit(fam);
            for pw in [1.0, 2.0, 4.0] {
                let quad = p.lp_norm_pow(pw);
                let brute = crate::quad::trapezoid(|x| p.eval(x).abs().powf(pw), -60.0, 60.0, 1_200_000);
                assert!(((quad - brute) / brute).abs() < 1e-6, "{fam} p={pw}: {quad} vs {brute}");
            }
        }
    }

    #[test]
    fn sigma_additive_and_multiplicative_zero() {
        let a = gaussian_spec(SigmaKind::Additive);
        assert_eq!(sigma_eval(&a, 0.3, 0.5, 123.0), (-0.25f64).exp());
        let m = gaussian_spec(SigmaKind::Multiplicative);
        assert_eq!(sigma_eval(&m, 0.3, 0.5, 0.0), 0.0);
    }

    #[test]
    fn sigma_envelope_and_lipschitz_sampling() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for fam in [Family::Gaussian, Family::Sech, Family::Bump] {
            let spec = ProblemSpec::new(Profile::unit(Family::Gaussian), Profile::new(fam, 1.5), SigmaKind::Multiplicative, 4.0, 2.0)
                .unwrap();
            for _ in 0..100_000 {
                let t = rng.random_range(0.0..2.0);
                let x = rng.random_range(-6.0..6.0);
                let r = rng.random_range(-50.0..50.0);
                let v = rng.random_range(-50.0..50.0);
                let s = spec.sigma(t, x, r);
                assert!(s.abs() <= spec.f.eval(x));
                let d = (s - spec.sigma(t, x, v)).abs();
                assert!(d <= spec.lipschitz_l * (r - v).abs() * (1.0 + 1e-12) + 1e-15);
            }
        }
    }

    #[test]
    fn config_errors_name_key_and_line() {
        let err = Config::parse("a = 1\nnot a pair\n").unwrap_err();
        assert!(matches!(err, LabError::ConfigSyntax { line: 2, .. }));
        let cfg = Config::parse("spec.u0 = gaussian # comment\n\n# full comment\nspec.q = four\n").unwrap();
        assert!(matches!(cfg.get_f64("spec.q"), Err(LabError::ConfigSyntax { line: 4, .. })));
        match build_spec(&cfg) {
            Err(LabError::MissingKey(k)) => assert_eq!(k, "spec.f"),
            other => panic!("{other:?}"),
        }
    }
}
