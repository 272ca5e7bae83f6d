use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::network::ReactionNetwork;
use crate::error::{Error, Result};

/// An observed CTMC path: initial state, `(time, reaction)` events and the
/// end of the observation window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub x0: Vec<u64>,
    pub events: Vec<(f64, usize)>,
    #[serde(rename = "T")]
    pub t_end: f64,
}

impl PathRecord {
    pub fn validate(&self, network: &ReactionNetwork) -> Result<()> {
        if self.x0.len() != network.n_species() {
            return Err(Error::DimensionMismatch {
                expected: network.n_species(),
                found: self.x0.len(),
            });
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "path end time {}",
                self.t_end
            )));
        }
        let mut last = 0.0;
        for (e, &(t, j)) in self.events.iter().enumerate() {
            if !(t > last || (e == 0 && t >= 0.0)) || t > self.t_end {
                return Err(Error::InvalidParameter(format!(
                    "event {e} at t = {t} is out of order"
                )));
            }
            if j >= network.n_reactions() {
                return Err(Error::IndexOutOfRange {
                    index: j,
                    dim: network.n_reactions(),
                });
            }
            last = t;
        }
        Ok(())
    }

    /// Piecewise-constant replay. Calls `visit(t0, t1, state, next)` for each
    /// holding interval, where `next` is the reaction ending it (`None` for
    /// the final interval up to `T`).
    pub fn replay<F>(&self, network: &ReactionNetwork, mut visit: F) -> Result<Vec<u64>>
    where
        F: FnMut(f64, f64, &[u64], Option<usize>),
    {
        self.validate(network)?;
        let mut state = self.x0.clone();
        let mut t = 0.0;
        for (e, &(te, j)) in self.events.iter().enumerate() {
            visit(t, te, &state, Some(j));
            state = network
                .fire(&state, j)
                .ok_or(Error::InconsistentPath { event: e })?;
            t = te;
        }
        visit(t, self.t_end, &state, None);
        Ok(state)
    }

    pub fn final_state(&self, network: &ReactionNetwork) -> Result<Vec<u64>> {
        self.replay(network, |_, _, _, _| {})
    }

    /// Writes `t, species...` rows, one per jump plus the initial state.
    pub fn write_trajectory_csv(&self, network: &ReactionNetwork, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(out, "t")?;
        for s in network.species() {
            write!(out, ",{s}")?;
        }
        writeln!(out)?;
        let mut rows = Vec::with_capacity(self.events.len() + 1);
        self.replay(network, |t0, _, state, _| rows.push((t0, state.to_vec())))?;
        for (t, state) in rows {
            write!(out, "{t:.16e}")?;
            for x in state {
                write!(out, ",{x}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Exact simulation by Gillespie's direct method on `[0, t_end]`.
pub fn ssa_simulate<R: Rng + ?Sized>(
    network: &ReactionNetwork,
    x0: &[u64],
    t_end: f64,
    rng: &mut R,
) -> Result<PathRecord> {
    if x0.len() != network.n_species() {
        return Err(Error::DimensionMismatch {
            expected: network.n_species(),
            found: x0.len(),
        });
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("end time {t_end}")));
    }
    let n = network.n_reactions();
    let mut state = x0.to_vec();
    let mut props = vec![0.0; n];
    let mut events = Vec::new();
    let mut t = 0.0;
    loop {
        let mut total = 0.0;
        for (j, p) in props.iter_mut().enumerate() {
            *p = network.propensity(&state, j);
            total += *p;
        }
        if !total.is_finite() {
            return Err(Error::PropensityOverflow { time: t });
        }
        if total == 0.0 {
            break;
        }
        let u: f64 = rng.random();
        // 1 - u lies in (0, 1], so the holding time is finite
        let dt = -(1.0 - u).ln() / total;
        t += dt;
        if t > t_end {
            break;
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = None;
        for (j, &p) in props.iter().enumerate() {
            if p > 0.0 {
                chosen = Some(j);
                acc += p;
                if target < acc {
                    break;
                }
            }
        }
        let j = chosen.expect("total propensity is positive");
        state = network
            .fire(&state, j)
            .expect("positive propensity keeps counts non-negative");
        if dt > 0.0 {
            events.push((t, j));
        } else {
            // a zero holding time cannot be represented in a strictly increasing record
            return Err(Error::PropensityOverflow { time: t });
        }
    }
    Ok(PathRecord {
        x0: x0.to_vec(),
        events,
        t_end,
    })
}
