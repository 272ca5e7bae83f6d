use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// True rates `(k1 V, k2, k3, k4)` of the two-species multiscale system.
pub const TWO_SPECIES_RATES: [f64; 4] = [100.0, 10.0, 10.0, 1.0];

/// True rates of the gene regulatory network.
pub const GRN_RATES: [f64; 8] = [0.04, 5000.0, 100.0, 1.0, 0.5, 2.0, 0.2, 0.05];

/// One mass-action reaction. Reactant and product multiplicities are indexed
/// by species.
#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    reactants: Vec<u32>,
    products: Vec<u32>,
    stoichiometry: Vec<i64>,
    /// `log` of the combinatorial denominator `prod_s m_s!`.
    log_denominator: f64,
}

impl Reaction {
    pub fn new(reactants: Vec<u32>, products: Vec<u32>) -> Result<Self> {
        if reactants.len() != products.len() {
            return Err(Error::DimensionMismatch {
                expected: reactants.len(),
                found: products.len(),
            });
        }
        let stoichiometry = reactants
            .iter()
            .zip(&products)
            .map(|(&r, &p)| i64::from(p) - i64::from(r))
            .collect();
        let log_denominator = reactants
            .iter()
            .map(|&m| (1..=m).map(|v| f64::from(v).ln()).sum::<f64>())
            .sum();
        Ok(Self {
            reactants,
            products,
            stoichiometry,
            log_denominator,
        })
    }

    pub fn reactants(&self) -> &[u32] {
        &self.reactants
    }

    pub fn products(&self) -> &[u32] {
        &self.products
    }

    pub fn stoichiometry(&self) -> &[i64] {
        &self.stoichiometry
    }

    pub fn order(&self) -> u32 {
        self.reactants.iter().sum()
    }

    /// Combinatorial factor `g(x) = prod_s x_s (x_s - 1) ... (x_s - m_s + 1) / m_s!`,
    /// so that the propensity is `k g(x)`. Zeroth-order reactions give 1.
    pub fn combinatorial(&self, state: &[u64]) -> f64 {
        let mut g = 1.0;
        for (&m, &x) in self.reactants.iter().zip(state) {
            for i in 0..u64::from(m) {
                if x <= i {
                    return 0.0;
                }
                g *= (x - i) as f64;
            }
        }
        if self.log_denominator == 0.0 {
            g
        } else {
            g / self.log_denominator.exp()
        }
    }
}

/// A mass-action reaction network with its rate constants. Zeroth-order
/// rates are taken to be volume-scaled already.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkRecord", into = "NetworkRecord")]
pub struct ReactionNetwork {
    species: Vec<String>,
    reactions: Vec<Reaction>,
    rates: Vec<f64>,
}

impl ReactionNetwork {
    pub fn new(species: Vec<String>, reactions: Vec<Reaction>, rates: Vec<f64>) -> Result<Self> {
        if reactions.len() != rates.len() {
            return Err(Error::DimensionMismatch {
                expected: reactions.len(),
                found: rates.len(),
            });
        }
        for r in &reactions {
            if r.reactants.len() != species.len() {
                return Err(Error::DimensionMismatch {
                    expected: species.len(),
                    found: r.reactants.len(),
                });
            }
        }
        check_rates(&rates)?;
        Ok(Self {
            species,
            reactions,
            rates,
        })
    }

    /// `∅ → S1 ⇌ S2 → ∅` with rates `(k1 V, k2, k3, k4)`.
    pub fn two_species(rates: [f64; 4]) -> Result<Self> {
        let r = |a: [u32; 2], b: [u32; 2]| Reaction::new(a.to_vec(), b.to_vec());
        Self::new(
            vec!["S1".into(), "S2".into()],
            vec![
                r([0, 0], [1, 0])?,
                r([1, 0], [0, 1])?,
                r([0, 1], [1, 0])?,
                r([0, 1], [0, 0])?,
            ],
            rates.to_vec(),
        )
    }

    /// Gene regulatory network over species `(G, G', M, P, D)`:
    /// `P+P ⇌ D`, `G+D ⇌ G'`, `G → G+M`, `M → M+P`, `P → ∅`, `M → ∅`.
    pub fn gene_regulatory(rates: [f64; 8]) -> Result<Self> {
        let r = |a: [u32; 5], b: [u32; 5]| Reaction::new(a.to_vec(), b.to_vec());
        Self::new(
            ["G", "G'", "M", "P", "D"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            vec![
                r([0, 0, 0, 2, 0], [0, 0, 0, 0, 1])?,
                r([0, 0, 0, 0, 1], [0, 0, 0, 2, 0])?,
                r([1, 0, 0, 0, 1], [0, 1, 0, 0, 0])?,
                r([0, 1, 0, 0, 0], [1, 0, 0, 0, 1])?,
                r([1, 0, 0, 0, 0], [1, 0, 1, 0, 0])?,
                r([0, 0, 1, 0, 0], [0, 0, 1, 1, 0])?,
                r([0, 0, 0, 1, 0], [0, 0, 0, 0, 0])?,
                r([0, 0, 1, 0, 0], [0, 0, 0, 0, 0])?,
            ],
            rates.to_vec(),
        )
    }

    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    pub fn n_reactions(&self) -> usize {
        self.reactions.len()
    }

    pub fn species(&self) -> &[String] {
        &self.species
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn with_rates(&self, rates: &[f64]) -> Result<Self> {
        if rates.len() != self.rates.len() {
            return Err(Error::DimensionMismatch {
                expected: self.rates.len(),
                found: rates.len(),
            });
        }
        check_rates(rates)?;
        Ok(Self {
            rates: rates.to_vec(),
            ..self.clone()
        })
    }

    /// `k_j g_j(x)`.
    pub fn propensity(&self, state: &[u64], j: usize) -> f64 {
        self.rates[j] * self.reactions[j].combinatorial(state)
    }

    /// State after firing reaction `j`, or `None` if a count would go negative.
    pub fn fire(&self, state: &[u64], j: usize) -> Option<Vec<u64>> {
        state
            .iter()
            .zip(&self.reactions[j].stoichiometry)
            .map(|(&x, &nu)| x.checked_add_signed(nu))
            .collect()
    }
}

/// Free-function form of [`ReactionNetwork::propensity`].
pub fn mass_action_propensity(network: &ReactionNetwork, state: &[u64], j: usize) -> f64 {
    network.propensity(state, j)
}

fn check_rates(rates: &[f64]) -> Result<()> {
    match rates.iter().find(|k| !(**k >= 0.0 && k.is_finite())) {
        Some(k) => Err(Error::InvalidParameter(format!("rate constant {k}"))),
        None => Ok(()),
    }
}

/// Serialized network: species names and reactions keyed by species name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkRecord {
    pub species: Vec<String>,
    pub reactions: Vec<ReactionRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactionRecord {
    #[serde(default)]
    pub reactants: BTreeMap<String, u32>,
    #[serde(default)]
    pub products: BTreeMap<String, u32>,
    pub rate: f64,
}

impl TryFrom<NetworkRecord> for ReactionNetwork {
    type Error = Error;

    fn try_from(rec: NetworkRecord) -> Result<Self> {
        let index = |name: &String| {
            rec.species
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| Error::Config(format!("unknown species {name:?}")))
        };
        let dense = |side: &BTreeMap<String, u32>| -> Result<Vec<u32>> {
            let mut v = vec![0; rec.species.len()];
            for (name, &m) in side {
                v[index(name)?] += m;
            }
            Ok(v)
        };
        let mut reactions = Vec::with_capacity(rec.reactions.len());
        let mut rates = Vec::with_capacity(rec.reactions.len());
        for r in &rec.reactions {
            reactions.push(Reaction::new(dense(&r.reactants)?, dense(&r.products)?)?);
            rates.push(r.rate);
        }
        Self::new(rec.species, reactions, rates)
    }
}

impl From<ReactionNetwork> for NetworkRecord {
    fn from(net: ReactionNetwork) -> Self {
        let sparse = |v: &[u32]| {
            v.iter()
                .enumerate()
                .filter(|(_, &m)| m > 0)
                .map(|(s, &m)| (net.species[s].clone(), m))
                .collect()
        };
        let reactions = net
            .reactions
            .iter()
            .zip(&net.rates)
            .map(|(r, &rate)| ReactionRecord {
                reactants: sparse(&r.reactants),
                products: sparse(&r.products),
                rate,
            })
            .collect();
        Self {
            species: net.species.clone(),
            reactions,
        }
    }
}
