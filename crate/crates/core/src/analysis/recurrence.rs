use crate::series::TimeSeries;

/// Kick at which the series first comes back to `>= threshold` after having
/// dropped below it. `None` if it never leaves or never returns.
pub fn first_return(series: &TimeSeries, threshold: f64) -> Option<usize> {
    let v = series.values();
    let left = v.iter().position(|&x| x < threshold)?;
    let back = v[left..].iter().position(|&x| x >= threshold)?;
    Some(series.kick_at(left + back))
}
