use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Total-order, lower-triangular multi-index set for one map component.
///
/// Component `component` (0-based) of a `dim`-dimensional map may only depend
/// on coordinates `0..=component`. Indices are kept in graded lexicographic
/// order: by total degree, then by descending exponent of the first
/// coordinate, then the second, and so on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiIndexSet {
    dim: usize,
    component: usize,
    order: usize,
    indices: Vec<Vec<u32>>,
}

impl MultiIndexSet {
    pub fn total_order(dim: usize, component: usize, order: usize) -> Result<Self> {
        if order.is_multiple_of(2) {
            return Err(Error::EvenOrder(order));
        }
        if dim == 0 || component >= dim {
            return Err(Error::IndexOutOfRange {
                index: component,
                dim,
            });
        }
        let active = component + 1;
        let mut indices = Vec::new();
        let mut current = vec![0u32; dim];
        for degree in 0..=order as u32 {
            push_degree(&mut indices, &mut current, 0, active, degree);
        }
        Ok(Self {
            dim,
            component,
            order,
            indices,
        })
    }

    /// Rebuilds a set from explicit indices, checking the triangular structure.
    pub fn from_indices(
        dim: usize,
        component: usize,
        order: usize,
        indices: Vec<Vec<u32>>,
    ) -> Result<Self> {
        if component >= dim {
            return Err(Error::IndexOutOfRange {
                index: component,
                dim,
            });
        }
        for idx in &indices {
            if idx.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: idx.len(),
                });
            }
            if idx[component + 1..].iter().any(|&e| e != 0) {
                return Err(Error::InvalidParameter(format!(
                    "multi-index {idx:?} depends on coordinates above {component}"
                )));
            }
            if idx.iter().sum::<u32>() as usize > order {
                return Err(Error::InvalidParameter(format!(
                    "multi-index {idx:?} exceeds total order {order}"
                )));
            }
        }
        Ok(Self {
            dim,
            component,
            order,
            indices,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn component(&self) -> usize {
        self.component
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<u32>] {
        &self.indices
    }

    /// Position of the linear term in this component's own coordinate.
    pub fn identity_position(&self) -> Option<usize> {
        self.indices.iter().position(|idx| {
            idx.iter()
                .enumerate()
                .all(|(k, &e)| e == u32::from(k == self.component))
        })
    }

    /// Coefficients of the identity map `T_i(u) = u_i`.
    pub fn identity_coefficients(&self) -> Vec<f64> {
        let mut iota = vec![0.0; self.len()];
        if let Some(pos) = self.identity_position() {
            iota[pos] = 1.0;
        }
        iota
    }
}

fn push_degree(
    out: &mut Vec<Vec<u32>>,
    current: &mut [u32],
    coord: usize,
    active: usize,
    remaining: u32,
) {
    if coord + 1 == active {
        current[coord] = remaining;
        out.push(current.to_vec());
        current[coord] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[coord] = e;
        push_degree(out, current, coord + 1, active, remaining - e);
    }
    current[coord] = 0;
}

/// Free-function form taking a 1-based component index.
pub fn build_index_set(dim: usize, component: usize, order: usize) -> Result<MultiIndexSet> {
    if component == 0 {
        return Err(Error::IndexOutOfRange {
            index: component,
            dim,
        });
    }
    MultiIndexSet::total_order(dim, component - 1, order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, j| acc * (n - j) / (j + 1))
    }

    #[test]
    fn two_dimensional_cubic_sets() {
        let first = build_index_set(2, 1, 3).unwrap();
        assert_eq!(
            first.indices(),
            &[vec![0, 0], vec![1, 0], vec![2, 0], vec![3, 0]]
        );
        let second = build_index_set(2, 2, 3).unwrap();
        assert_eq!(second.len(), 10);
        assert_eq!(first.len() + second.len(), 14);
        assert_eq!(second.indices()[1], vec![1, 0]);
        assert_eq!(second.indices()[2], vec![0, 1]);
    }

    #[test]
    fn affine_one_dimensional() {
        let set = build_index_set(1, 1, 1).unwrap();
        assert_eq!(set.indices(), &[vec![0], vec![1]]);
        assert_eq!(set.identity_coefficients(), vec![0.0, 1.0]);
    }

    #[test]
    fn rejects_even_order_and_bad_component() {
        assert!(matches!(build_index_set(2, 1, 2), Err(Error::EvenOrder(2))));
        assert!(matches!(
            build_index_set(2, 3, 3),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(build_index_set(2, 0, 3).is_err());
    }

    #[test]
    fn sizes_match_binomial_counts() {
        for d in 1..=5 {
            for i in 0..d {
                for p in [1, 3, 5] {
                    let set = MultiIndexSet::total_order(d, i, p).unwrap();
                    assert_eq!(set.len(), binomial(i + 1 + p, p));
                    for idx in set.indices() {
                        assert!(idx[i + 1..].iter().all(|&e| e == 0));
                        assert!(idx.iter().sum::<u32>() as usize <= p);
                    }
                    let degrees: Vec<u32> =
                        set.indices().iter().map(|idx| idx.iter().sum()).collect();
                    assert!(degrees.windows(2).all(|w| w[0] <= w[1]));
                }
            }
        }
    }
}
