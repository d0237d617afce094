//! Exact fixed point of the per-source share map on one affine piece.
//!
//! A source's smallest share, as a function of the demands of the other
//! unfrozen sources, is piecewise affine. Near a point `y` the water-fill
//! takes the same branches for every nearby point, so replaying it with
//! affine values yields the piece `x = A x + b`; solving that system gives
//! the fixed point whenever `y` lies on a piece that touches it.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::partition::{PartitionNode, PartitionTree};
use crate::rate::Rate;
use crate::topology::SourceId;

#[derive(Clone)]
struct Affine {
    at: Rate,
    konst: BigRational,
    coef: Vec<BigRational>,
}

impl Affine {
    fn constant(value: &Rate, n: usize) -> Self {
        Affine {
            at: value.clone(),
            konst: value.as_ratio().clone(),
            coef: vec![BigRational::zero(); n],
        }
    }

    fn variable(index: usize, at: &Rate, n: usize) -> Self {
        let mut coef = vec![BigRational::zero(); n];
        coef[index] = BigRational::one();
        Affine {
            at: at.clone(),
            konst: BigRational::zero(),
            coef,
        }
    }

    fn combine(&self, other: &Affine, sign: i32) -> Affine {
        let pick = |a: &BigRational, b: &BigRational| if sign > 0 { a + b } else { a - b };
        Affine {
            at: if sign > 0 {
                &self.at + &other.at
            } else {
                &self.at - &other.at
            },
            konst: pick(&self.konst, &other.konst),
            coef: self
                .coef
                .iter()
                .zip(&other.coef)
                .map(|(a, b)| pick(a, b))
                .collect(),
        }
    }

    fn div_count(&self, n: usize) -> Affine {
        let d = BigRational::from_integer(n.into());
        Affine {
            at: self.at.div_count(n),
            konst: &self.konst / &d,
            coef: self.coef.iter().map(|c| c / &d).collect(),
        }
    }
}

type Values<'a> = BTreeMap<&'a SourceId, Affine>;

fn node_value(node: &PartitionNode, values: &Values) -> Option<Affine> {
    match node {
        PartitionNode::Leaf(s) => values.get(s).cloned(),
        PartitionNode::Group { children, .. } => {
            let mut parts = children.iter().map(|c| node_value(c, values));
            let first = parts.next()??;
            parts.try_fold(first, |acc, p| Some(acc.combine(&p?, 1)))
        }
    }
}

/// Affine share of the one leaf missing from `values` (the unbounded one).
/// A sibling counts as satisfied only when its demand is at least `slack`
/// below the level, so near-ties take the capped branch.
fn leaf_share(
    children: &[PartitionNode],
    available: Affine,
    s: &SourceId,
    values: &Values,
    slack: &Rate,
) -> Option<Affine> {
    let own = children.iter().position(|c| c.contains(s))?;
    let wants: Vec<Option<Affine>> = children.iter().map(|c| node_value(c, values)).collect();
    let mut order: Vec<usize> = (0..children.len()).collect();
    order.sort_by(|&a, &b| match (&wants[a], &wants[b]) {
        (Some(x), Some(y)) => x.at.cmp(&y.at),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });

    let mut remaining = available;
    let mut left = children.len();
    let mut satisfied = vec![false; children.len()];
    for &c in &order {
        let level = remaining.div_count(left);
        match &wants[c] {
            Some(d) if &d.at + slack <= level.at => {
                remaining = remaining.combine(d, -1);
                left -= 1;
                satisfied[c] = true;
            }
            _ => break,
        }
    }
    let grant = if satisfied[own] {
        wants[own].clone()?
    } else {
        remaining.div_count(left)
    };
    match &children[own] {
        PartitionNode::Leaf(_) => Some(grant),
        PartitionNode::Group { children, .. } => leaf_share(children, grant, s, values, slack),
    }
}

/// Solve the affine piece of the share map selected at `y` and return a
/// fixed point of it, or `None` if the piece has none.
pub(super) fn solve_piece<'a>(
    trees: &[(PartitionTree, Rate)],
    frozen: &BTreeMap<&'a SourceId, Rate>,
    unfrozen: &[&'a SourceId],
    y: &BTreeMap<&'a SourceId, Rate>,
    slack: &Rate,
    free_at: &BTreeMap<&'a SourceId, Rate>,
) -> Option<BTreeMap<&'a SourceId, Rate>> {
    let n = unfrozen.len();
    let mut values: Values = frozen.iter().map(|(s, r)| (*s, Affine::constant(r, n))).collect();
    values.extend(
        unfrozen
            .iter()
            .enumerate()
            .map(|(i, s)| (*s, Affine::variable(i, &y[s], n))),
    );

    let mut rows: Vec<Vec<BigRational>> = Vec::with_capacity(n);
    for (i, s) in unfrozen.iter().enumerate() {
        let own = values.remove(s).expect("every unfrozen source has a value");
        let share = trees
            .iter()
            .filter(|(tree, _)| tree.leaves().contains(s))
            .filter_map(|(tree, cap)| leaf_share(&tree.children, Affine::constant(cap, n), s, &values, slack))
            .min_by(|a, b| a.at.cmp(&b.at))?;
        values.insert(s, own);
        // x_i - sum_j a_ij x_j = b_i
        let mut row: Vec<BigRational> = share.coef.iter().map(|c| -c).collect();
        row[i] += BigRational::one();
        row.push(share.konst);
        rows.push(row);
    }

    // Reduced row echelon form; columns without a pivot are free.
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    for col in 0..n {
        let r0 = pivots.len();
        let Some(pivot) = (r0..n).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(r0, pivot);
        let p = rows[r0][col].clone();
        for v in rows[r0].iter_mut() {
            *v = &*v / &p;
        }
        let pivot_row = rows[r0].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == r0 || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= &f * pv;
            }
        }
        pivots.push((r0, col));
    }
    if rows[pivots.len()..].iter().any(|row| !row[n].is_zero()) {
        return None;
    }

    // The piece may hold a continuum of fixed points; free variables take
    // their value from `free_at`.
    let mut x: Vec<BigRational> = unfrozen.iter().map(|s| free_at[s].as_ratio().clone()).collect();
    for &(r, col) in &pivots {
        let mut v = rows[r][n].clone();
        for (j, c) in rows[r][..n].iter().enumerate() {
            if j != col && !c.is_zero() && !pivots.iter().any(|&(_, pc)| pc == j) {
                v -= c * &x[j];
            }
        }
        x[col] = v;
    }
    Some(
        unfrozen
            .iter()
            .zip(x)
            .map(|(s, v)| (*s, Rate::from_ratio(v)))
            .collect(),
    )
}
