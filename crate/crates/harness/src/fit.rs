//! Least-squares order fits on log error versus log stepsize.

/// Errors at or below this are treated as round-off regardless of the
/// relative rule.
pub const ROUNDOFF_FLOOR: f64 = 1e-13;

/// Rungs within this factor of the smallest error are dropped.
pub const FLOOR_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    /// `None` when fewer than two rungs survive.
    pub order: Option<f64>,
    pub used: usize,
    /// Every rung was at or near the round-off floor.
    pub floor: bool,
    /// Errors never grow by more than [`FLOOR_FACTOR`] as `h` shrinks.
    pub monotone: bool,
}

/// Fit `log e = p log h + c` over `(h, error)` pairs. Divergent rungs
/// (non-finite error) are ignored.
pub fn fit_order(points: &[(f64, f64)]) -> OrderFit {
    let finite: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(h, e)| h.is_finite() && *h > 0.0 && e.is_finite() && *e >= 0.0)
        .collect();
    let min = finite.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let kept: Vec<(f64, f64)> = finite
        .iter()
        .copied()
        .filter(|(_, e)| *e > ROUNDOFF_FLOOR && *e > FLOOR_FACTOR * min)
        .collect();

    let mut by_h = finite.clone();
    by_h.sort_by(|a, b| b.0.total_cmp(&a.0));
    let monotone = by_h
        .windows(2)
        .all(|w| w[1].1 <= FLOOR_FACTOR * w[0].1 || w[1].1 <= ROUNDOFF_FLOOR);

    let order = (kept.len() >= 2).then(|| {
        let n = kept.len() as f64;
        let (xs, ys): (Vec<f64>, Vec<f64>) = kept.iter().map(|(h, e)| (h.ln(), e.ln())).unzip();
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        sxy / sxx
    });
    OrderFit {
        order,
        used: kept.len(),
        floor: order.is_none() && !finite.is_empty(),
        monotone,
    }
}
