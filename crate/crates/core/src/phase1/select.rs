use crate::bayes::pava_isotonic;
use crate::domain::{CountTable, Dose, UtilityWeights};
use crate::error::Result;

/// MTD among `tried` doses: the isotonic DLT estimate closest to `target`.
/// Ties go to the higher dose when the estimate is below target, else the lower.
/// With `bound`, a pick whose estimate reaches it is replaced by the highest
/// dose estimated below it.
pub fn select_mtd(counts: &[CountTable], tried: &[Dose], target: f64, bound: Option<f64>) -> Result<Option<Dose>> {
    if tried.is_empty() {
        return Ok(None);
    }
    let rates: Vec<f64> = tried
        .iter()
        .map(|d| counts[d.idx()].tox_rate().unwrap_or(0.0))
        .collect();
    let weights: Vec<f64> = tried.iter().map(|d| counts[d.idx()].n() as f64).collect();
    let fit = pava_isotonic(&rates, &weights)?;
    let mut best = 0;
    for i in 1..fit.len() {
        let (diff, best_diff) = ((fit[i] - target).abs(), (fit[best] - target).abs());
        if diff < best_diff || (diff == best_diff && fit[i] < target) {
            best = i;
        }
    }
    if let Some(b) = bound {
        if fit[best] >= b {
            best = (0..best).rev().find(|&i| fit[i] < b).unwrap_or(0);
        }
    }
    Ok(Some(tried[best]))
}

/// Best observed-utility dose among `allowed` and its better neighbour, ascending.
pub fn select_obd(counts: &[CountTable], allowed: &[Dose], w: &UtilityWeights) -> Vec<Dose> {
    let util = |d: Dose| counts[d.idx()].mean_utility(w);
    let mut best: Option<(Dose, f64)> = None;
    for &d in allowed {
        let Some(u) = util(d) else { continue };
        if best.is_none_or(|(_, bu)| u > bu) {
            best = Some((d, u));
        }
    }
    let Some((obd, _)) = best else {
        return Vec::new();
    };
    let neighbour = |d: Option<Dose>| d.filter(|d| allowed.contains(d)).and_then(|d| util(d).map(|u| (d, u)));
    let below = neighbour(obd.0.checked_sub(1).filter(|&k| k >= 1).map(Dose));
    let above = neighbour(Some(Dose(obd.0 + 1)));
    let companion = match (below, above) {
        (Some((b, ub)), Some((a, ua))) => Some(if ua > ub { a } else { b }),
        (Some((b, _)), None) => Some(b),
        (None, Some((a, _))) => Some(a),
        (None, None) => None,
    };
    let mut out = vec![obd];
    out.extend(companion);
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(n: usize, n_tox: usize) -> CountTable {
        CountTable {
            cells: [0, n - n_tox, 0, n_tox],
        }
    }

    #[test]
    fn closest_to_target() {
        let counts = [table(10, 1), table(10, 2), table(10, 4)];
        let tried = [Dose(1), Dose(2), Dose(3)];
        assert_eq!(select_mtd(&counts, &tried, 0.35, None).unwrap(), Some(Dose(3)));
        assert_eq!(select_mtd(&counts, &[], 0.35, None).unwrap(), None);
    }

    #[test]
    fn bounded_pick_steps_down() {
        let counts = [table(10, 1), table(10, 3), table(10, 5)];
        let tried = [Dose(1), Dose(2), Dose(3)];
        assert_eq!(select_mtd(&counts, &tried, 0.45, None).unwrap(), Some(Dose(3)));
        assert_eq!(select_mtd(&counts, &tried, 0.45, Some(0.42)).unwrap(), Some(Dose(2)));
        assert_eq!(select_mtd(&counts, &tried, 0.45, Some(0.05)).unwrap(), Some(Dose(1)));
    }

    #[test]
    fn pooled_ties() {
        // doses 2 and 3 pool to 0.3, below target: the higher wins
        let counts = [table(10, 0), table(10, 4), table(10, 2)];
        let tried = [Dose(1), Dose(2), Dose(3)];
        assert_eq!(select_mtd(&counts, &tried, 0.35, None).unwrap(), Some(Dose(3)));
        // pooled above target: the lower wins
        let counts = [table(10, 0), table(10, 5), table(10, 5)];
        assert_eq!(select_mtd(&counts, &tried, 0.35, None).unwrap(), Some(Dose(2)));
    }

    #[test]
    fn obd_with_neighbours() {
        let w = UtilityWeights::default();
        let counts = [
            CountTable { cells: [0, 3, 0, 0] },
            CountTable { cells: [3, 0, 0, 0] },
            CountTable { cells: [1, 2, 0, 0] },
        ];
        let all = [Dose(1), Dose(2), Dose(3)];
        assert_eq!(select_obd(&counts, &all, &w), vec![Dose(2), Dose(3)]);
        assert_eq!(select_obd(&counts, &[Dose(2)], &w), vec![Dose(2)]);
        assert!(select_obd(&counts, &[], &w).is_empty());
    }
}
