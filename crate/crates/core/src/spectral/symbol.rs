use super::{ball_symbol, gamma, phi};
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Serializable description of a multiplier symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymbolSpec {
    Laplacian,
    SphereAvg { n: usize },
    BallAvg { n: usize },
    Heat { xi: Complex64 },
    /// `sum_k c_k gamma(z)^k`.
    Polynomial { coefficients: Vec<Complex64> },
    Reciprocal { of: Box<SymbolSpec> },
}

impl SymbolSpec {
    pub fn label(&self) -> String {
        match self {
            Self::Laplacian => "laplacian".into(),
            Self::SphereAvg { n } => format!("sphere_avg({n})"),
            Self::BallAvg { n } => format!("ball_avg({n})"),
            Self::Heat { xi } => format!("heat({}{:+}i)", xi.re, xi.im),
            Self::Polynomial { coefficients } => format!("polynomial(deg {})", coefficients.len().saturating_sub(1)),
            Self::Reciprocal { of } => format!("1/{}", of.label()),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::Heat { xi } if *xi == Complex64::new(0.0, 0.0) => {
                Err(Error::Parameter("heat symbol needs xi != 0".into()))
            }
            Self::Polynomial { coefficients } if coefficients.is_empty() => {
                Err(Error::Parameter("polynomial symbol needs at least one coefficient".into()))
            }
            Self::Reciprocal { of } => of.validate(),
            _ => Ok(()),
        }
    }
}

/// An evaluatable symbol `z -> kappa(z)` for a fixed tree parameter `q`.
///
/// Every implemented symbol is even and `tau`-periodic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSymbol {
    pub q: usize,
    pub spec: SymbolSpec,
}

impl SpectralSymbol {
    pub fn new(q: usize, spec: SymbolSpec) -> Result<Self> {
        if q < 2 {
            return Err(Error::Parameter(format!("q = {q}: branching parameter must be >= 2")));
        }
        spec.validate()?;
        Ok(Self { q, spec })
    }

    pub fn laplacian(q: usize) -> Self {
        Self { q, spec: SymbolSpec::Laplacian }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        eval_spec(self.q, &self.spec, z)
    }

    pub fn is_even(&self) -> bool {
        true
    }

    pub fn is_periodic(&self) -> bool {
        true
    }

    /// `Some(true)` when the symbol provably never vanishes; `None` when only a numerical check can tell.
    pub fn known_nonvanishing(&self) -> Option<bool> {
        match &self.spec {
            SymbolSpec::Heat { .. } => Some(true),
            SymbolSpec::Reciprocal { .. } => Some(true),
            _ => None,
        }
    }

    pub fn reciprocal(&self) -> Self {
        Self { q: self.q, spec: SymbolSpec::Reciprocal { of: Box::new(self.spec.clone()) } }
    }
}

fn eval_spec(q: usize, spec: &SymbolSpec, z: Complex64) -> Complex64 {
    match spec {
        SymbolSpec::Laplacian => gamma(q, z),
        SymbolSpec::SphereAvg { n } => phi(q, z, *n),
        SymbolSpec::BallAvg { n } => ball_symbol(q, z, *n),
        SymbolSpec::Heat { xi } => (xi * gamma(q, z)).exp(),
        SymbolSpec::Polynomial { coefficients } => {
            let g = gamma(q, z);
            coefficients.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * g + c)
        }
        SymbolSpec::Reciprocal { of } => 1.0 / eval_spec(q, of, z),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::period;

    #[test]
    fn json_shape() {
        let s = SymbolSpec::Heat { xi: Complex64::new(0.3, 0.4) };
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(text, r#"{"kind":"heat","xi":[0.3,0.4]}"#);
        let back: SymbolSpec = serde_json::from_str(r#"{"kind":"sphere_avg","n":2}"#).unwrap();
        assert_eq!(back, SymbolSpec::SphereAvg { n: 2 });
        assert!(serde_json::from_str::<SymbolSpec>(r#"{"kind":"bogus"}"#).is_err());
    }

    #[test]
    fn rejects_zero_xi() {
        let bad = SymbolSpec::Heat { xi: Complex64::new(0.0, 0.0) };
        assert!(SpectralSymbol::new(2, bad).is_err());
    }

    #[test]
    fn even_and_periodic() {
        let specs = [
            SymbolSpec::Laplacian,
            SymbolSpec::SphereAvg { n: 3 },
            SymbolSpec::BallAvg { n: 4 },
            SymbolSpec::Heat { xi: Complex64::new(0.3, -0.8) },
            SymbolSpec::Polynomial { coefficients: vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)] },
        ];
        let tau = period(3);
        for spec in specs {
            let s = SpectralSymbol::new(3, spec).unwrap();
            for z in [Complex64::new(0.2, 0.1), Complex64::new(-1.3, -0.4)] {
                let v = s.eval(z);
                assert!((v - s.eval(-z)).norm() < 1e-10 * v.norm().max(1.0));
                assert!((v - s.eval(z + tau)).norm() < 1e-10 * v.norm().max(1.0));
            }
        }
    }

    #[test]
    fn polynomial_in_gamma() {
        let s = SpectralSymbol::new(
            2,
            SymbolSpec::Polynomial {
                coefficients: vec![Complex64::new(0.0, 0.0), Complex64::new(-2.0, 0.0), Complex64::new(1.0, 0.0)],
            },
        )
        .unwrap();
        let z = Complex64::new(0.4, -0.2);
        let g = gamma(2, z);
        assert!((s.eval(z) - (g * g - 2.0 * g)).norm() < 1e-14);
    }
}
