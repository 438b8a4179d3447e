use serde::Deserialize;

use super::{
    alpha_bound, calibrate_world, expected_payment_mc, relative_saving_mc, saving_lower_bound, utility_gap,
    AgentBelief, BeliefModel, Estimate, GenerativeWorld, IncentiveError, McConfig, Strategy, Verdict,
};
use crate::scalar::{format_decimal, Rational, Scalar};

/// Deviations checked against truth-telling, in CSV column order.
pub const DEVIATIONS: [Strategy; 4] =
    [Strategy::AlwaysZero, Strategy::AlwaysOne, Strategy::Flip, Strategy::Random(0.5)];

#[derive(Debug, Clone, PartialEq)]
pub enum AlphaSpec {
    Fixed(Rational),
    /// `margin` times the equilibrium bound.
    Auto { margin: Rational },
}

impl AlphaSpec {
    /// `auto`, `auto:MARGIN` or a decimal.
    pub fn parse(s: &str) -> Result<Self, IncentiveError> {
        let bad = || IncentiveError::InvalidScenario(format!("bad alpha `{s}`"));
        match s.trim() {
            "auto" => Ok(AlphaSpec::Auto { margin: Rational::from_count(2) }),
            t => match t.strip_prefix("auto:") {
                Some(m) => Ok(AlphaSpec::Auto { margin: Rational::parse_decimal(m).ok_or_else(bad)? }),
                None => Ok(AlphaSpec::Fixed(Rational::parse_decimal(t).ok_or_else(bad)?)),
            },
        }
    }
}

/// A number written either as a TOML float/integer or as a decimal string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Decimal {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Decimal {
    fn exact(&self) -> Result<Rational, IncentiveError> {
        let text = match self {
            Decimal::Int(i) => i.to_string(),
            Decimal::Float(f) => f.to_string(),
            Decimal::Text(s) => s.clone(),
        };
        Rational::parse_decimal(&text).ok_or_else(|| IncentiveError::InvalidScenario(format!("bad number `{text}`")))
    }
}

/// One `[[scenario]]` table.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub id: String,
    pub agents: usize,
    refund: Decimal,
    prior: Decimal,
    /// `P(1|1)`; defaults to `prior + bump`.
    posterior: Option<Decimal>,
    bump: Option<Decimal>,
    alpha: Option<String>,
    #[serde(default = "default_rounds")]
    pub rounds: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_rounds() -> u64 {
    1_000_000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub scenario: Vec<ScenarioSpec>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Vec<IncentiveScenario>, IncentiveError> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| IncentiveError::InvalidScenario(e.to_string()))?;
        file.scenario.iter().map(IncentiveScenario::from_spec).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncentiveScenario {
    pub id: String,
    pub n: usize,
    pub c: Rational,
    pub beliefs: BeliefModel<Rational>,
    pub alpha: AlphaSpec,
    pub mc: McConfig,
}

impl IncentiveScenario {
    pub fn from_spec(spec: &ScenarioSpec) -> Result<Self, IncentiveError> {
        let prior = spec.prior.exact()?;
        let belief = match (&spec.posterior, &spec.bump) {
            (Some(p), None) => {
                let post = p.exact()?;
                let bump = post - prior.clone();
                AgentBelief::with_bump(prior, bump)?
            }
            (None, Some(b)) => AgentBelief::with_bump(prior, b.exact()?)?,
            _ => {
                return Err(IncentiveError::InvalidScenario(format!(
                    "scenario `{}` needs exactly one of `posterior` or `bump`",
                    spec.id
                )))
            }
        };
        Ok(Self {
            id: spec.id.clone(),
            n: spec.agents,
            c: spec.refund.exact()?,
            beliefs: BeliefModel::uniform(belief),
            alpha: AlphaSpec::parse(spec.alpha.as_deref().unwrap_or("auto"))?,
            mc: McConfig::new(spec.rounds, spec.seed),
        })
    }

    pub fn alpha_bound(&self) -> Result<Rational, IncentiveError> {
        alpha_bound(self.n, &self.c, &self.beliefs)
    }

    pub fn alpha_used(&self) -> Result<Rational, IncentiveError> {
        match &self.alpha {
            AlphaSpec::Fixed(a) => Ok(a.clone()),
            AlphaSpec::Auto { margin } => Ok(self.alpha_bound()? * margin),
        }
    }

    fn belief(&self) -> &AgentBelief<Rational> {
        &self.beliefs.agents()[0]
    }

    pub fn world(&self) -> Result<GenerativeWorld, IncentiveError> {
        let b = self.belief();
        calibrate_world(b.prior_1.to_f64_lossy(), b.post_1_given_1.to_f64_lossy())
    }

    /// Utility gap of truth-telling over each deviation. Errors with
    /// `AlphaTooSmall` when alpha does not exceed the bound.
    pub fn equilibrium_check(&self) -> Result<Vec<(Strategy, Estimate, Verdict)>, IncentiveError> {
        let bound = self.alpha_bound()?;
        let alpha = self.alpha_used()?;
        if alpha <= bound {
            return Err(IncentiveError::AlphaTooSmall { alpha: alpha.to_f64_lossy(), bound: bound.to_f64_lossy() });
        }
        let world = self.world()?;
        DEVIATIONS
            .iter()
            .map(|&d| {
                let est = utility_gap(self.n, self.c.to_f64_lossy(), alpha.to_f64_lossy(), &world, d, &self.mc)?;
                Ok((d, est, Verdict::of(&est)))
            })
            .collect()
    }

    pub fn run(&self) -> Result<ScenarioResult, IncentiveError> {
        let alpha_bound = self.alpha_bound()?;
        let alpha_used = self.alpha_used()?;
        let verdicts = self.equilibrium_check()?;
        let world = self.world()?;
        let (c, a) = (self.c.to_f64_lossy(), alpha_used.to_f64_lossy());
        Ok(ScenarioResult {
            id: self.id.clone(),
            saving_bound: saving_lower_bound(&self.belief().prior_1, &alpha_used, &self.c)?,
            payment: expected_payment_mc(self.n, c, a, &world, &self.mc)?,
            saving: relative_saving_mc(self.n, c, a, &world, &self.mc)?,
            alpha_bound,
            alpha_used,
            verdicts,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub id: String,
    pub alpha_bound: Rational,
    pub alpha_used: Rational,
    pub payment: Estimate,
    pub saving_bound: Rational,
    pub saving: Estimate,
    pub verdicts: Vec<(Strategy, Estimate, Verdict)>,
}

impl ScenarioResult {
    pub fn csv_header() -> String {
        let mut cols = vec![
            "scenario_id".to_string(),
            "alpha_bound".into(),
            "alpha_used".into(),
            "payment_mc".into(),
            "saving_bound".into(),
            "saving_mc".into(),
        ];
        cols.extend(DEVIATIONS.iter().map(|d| format!("verdict_{d}")));
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let mut cols = vec![
            self.id.clone(),
            format_decimal(&self.alpha_bound),
            format_decimal(&self.alpha_used),
            format_decimal(&self.payment.mean),
            format_decimal(&self.saving_bound),
            format_decimal(&self.saving.mean),
        ];
        cols.extend(self.verdicts.iter().map(|(_, _, v)| v.to_string()));
        cols.join(",")
    }
}
