//! JSON problem-file format.

use serde::{Deserialize, Serialize};

use super::{
    HalfBasis, HalfExpansion, JumpCondition, PiecewiseWeight, Potentials, ProblemSpec, Profile,
    ValidationMode,
};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub weight: WeightFile,
    pub jumps: Vec<JumpFile>,
    pub potentials: PotentialsFile,
    #[serde(default = "default_mode")]
    pub mode: String,
}

fn default_mode() -> String {
    "strict".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightFile {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpFile {
    pub location: f64,
    pub alpha: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PotentialsFile {
    Cosine {
        p: Vec<f64>,
        q: Vec<f64>,
    },
    Grid {
        p: Vec<f64>,
        q: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid_n: Option<usize>,
    },
    /// Extension: separate expansions on `[0, pi/2]` and a right-half representation.
    Split {
        left: HalfFile,
        right: Box<PotentialsFile>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfFile {
    #[serde(default = "default_basis")]
    pub basis: String,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

fn default_basis() -> String {
    HalfBasis::Chebyshev.name().into()
}

fn cast<T: Real>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::lit(x)).collect()
}

fn uncast<T: Real>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

impl PotentialsFile {
    fn to_potentials<T: Real>(&self) -> Result<Potentials<T>> {
        match self {
            PotentialsFile::Cosine { p, q } => Potentials::cosine(cast(p), cast(q)),
            PotentialsFile::Grid { p, q, grid_n } => {
                if let Some(n) = grid_n {
                    if *n != p.len() || *n != q.len() {
                        return Err(Error::Validation(format!(
                            "grid_n = {n} but p has {} and q has {} samples",
                            p.len(),
                            q.len()
                        )));
                    }
                }
                Potentials::grid(cast(p), cast(q))
            }
            PotentialsFile::Split { left, right } => {
                if matches!(**right, PotentialsFile::Split { .. }) {
                    return Err(Error::Validation("split potentials cannot nest".into()));
                }
                let basis = HalfBasis::from_name(&left.basis).ok_or_else(|| {
                    Error::Validation(format!("unknown half basis '{}'", left.basis))
                })?;
                let right = right.to_potentials::<T>()?;
                Potentials::split(
                    HalfExpansion::new(basis, cast(&left.p)),
                    HalfExpansion::new(basis, cast(&left.q)),
                    &right,
                )
            }
        }
    }

    fn from_potentials<T: Real>(pots: &Potentials<T>) -> Result<Self> {
        match (pots.p(), pots.q()) {
            (Profile::Cosine(p), Profile::Cosine(q)) => Ok(PotentialsFile::Cosine {
                p: uncast(p),
                q: uncast(q),
            }),
            (Profile::Grid(p), Profile::Grid(q)) => Ok(PotentialsFile::Grid {
                p: uncast(p.samples()),
                q: uncast(q.samples()),
                grid_n: Some(p.samples().len()),
            }),
            (
                Profile::Split { left: lp, right: rp },
                Profile::Split { left: lq, right: rq },
            ) if lp.basis == lq.basis => {
                let right = Potentials::from_parts((**rp).clone(), (**rq).clone());
                Ok(PotentialsFile::Split {
                    left: HalfFile {
                        basis: lp.basis.name().into(),
                        p: uncast(&lp.coeffs),
                        q: uncast(&lq.coeffs),
                    },
                    right: Box::new(Self::from_potentials(&right)?),
                })
            }
            _ => Err(Error::Validation(
                "p and q use different representations; cannot serialise".into(),
            )),
        }
    }
}

impl ProblemFile {
    pub fn to_spec<T: Real>(&self) -> Result<ProblemSpec<T>> {
        let mode = match self.mode.as_str() {
            "strict" => ValidationMode::Strict,
            "relaxed" => ValidationMode::Relaxed,
            other => return Err(Error::Validation(format!("unknown mode '{other}'"))),
        };
        if self.jumps.len() != 2 {
            return Err(Error::Validation(format!(
                "exactly two jumps required, got {}",
                self.jumps.len()
            )));
        }
        let jump = |j: &JumpFile| JumpCondition::new(T::lit(j.location), T::lit(j.alpha), T::lit(j.gamma));
        ProblemSpec::new(
            PiecewiseWeight::new(T::lit(self.weight.alpha), T::lit(self.weight.beta)),
            self.potentials.to_potentials()?,
            [jump(&self.jumps[0]), jump(&self.jumps[1])],
            mode,
        )
    }

    pub fn from_spec<T: Real>(spec: &ProblemSpec<T>) -> Result<Self> {
        let w = spec.weight();
        Ok(Self {
            weight: WeightFile {
                alpha: w.alpha.as_f64(),
                beta: w.beta.as_f64(),
            },
            jumps: spec
                .jumps()
                .iter()
                .map(|j| JumpFile {
                    location: j.location.as_f64(),
                    alpha: j.alpha.as_f64(),
                    gamma: j.gamma.as_f64(),
                })
                .collect(),
            potentials: PotentialsFile::from_potentials(spec.potentials())?,
            mode: spec.mode().name().into(),
        })
    }
}

/// Parses and validates problem-file text.
pub fn parse_problem<T: Real>(text: &str) -> Result<ProblemSpec<T>> {
    let file: ProblemFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.to_spec()
}
