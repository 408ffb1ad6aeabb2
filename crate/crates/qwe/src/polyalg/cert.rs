use super::{format_monomial, format_q, BiPoly};
use num_traits::{Signed, Zero};
use serde::Serialize;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    MonomialSign,
    Sturm,
    ExactIdentity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Proved,
    Failed,
}

/// Required sign of a polynomial on the region of interest.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    NonPositive,
    NonNegative,
}

impl Sense {
    pub fn admits_sign(self, positive: bool) -> bool {
        match self {
            Sense::NonPositive => !positive,
            Sense::NonNegative => positive,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sense::NonPositive => "<= 0",
            Sense::NonNegative => ">= 0",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignCertificate {
    pub claim: String,
    pub method: Method,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    pub wall_time_ms: f64,
}

impl SignCertificate {
    pub fn proved(&self) -> bool {
        self.status == Status::Proved
    }

    pub(crate) fn timed(claim: &str, method: Method, start: Instant, witness: Option<String>) -> Self {
        SignCertificate {
            claim: claim.to_string(),
            method,
            status: if witness.is_none() { Status::Proved } else { Status::Failed },
            witness,
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        }
    }
}

/// Proves that `p` has the required sign on the closed positive quadrant by
/// checking every coefficient. The first offending monomial is the witness.
pub fn monomial_sign_certificate(claim: &str, p: &BiPoly, sense: Sense) -> SignCertificate {
    let start = Instant::now();
    let vars = [p.vars[0].as_str(), p.vars[1].as_str()];
    let witness = p
        .terms()
        .find(|(_, _, c)| !c.is_zero() && !sense.admits_sign(c.is_positive()))
        .map(|(i, j, c)| {
            let m = format_monomial(&vars, &[i, j]);
            let m = if m.is_empty() { "1".to_string() } else { m };
            format!("coefficient of {m} is {}", format_q(c))
        });
    SignCertificate::timed(claim, Method::MonomialSign, start, witness)
}
