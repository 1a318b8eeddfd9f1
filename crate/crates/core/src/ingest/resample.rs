use super::{SampleSeries, UniformSeries};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Linear interpolation of `series` onto a grid of spacing `1 / rate`
/// anchored at its first timestamp.
///
/// The grid has `floor((t_last - t_first) * rate) + 1` points. A grid point
/// that coincides with a raw timestamp takes the raw value unchanged.
pub fn resample_linear<T: Scalar>(series: &SampleSeries<T>, rate: T) -> Result<UniformSeries<T>> {
    if !(rate > T::zero()) || !rate.is_finite() {
        return Err(Error::Domain(format!(
            "resampling rate must be positive, got {rate}"
        )));
    }
    let (times, values) = (series.times(), series.values());
    if times.len() < 2 {
        return Err(Error::InsufficientData {
            what: "resampling",
            needed: 2,
            got: times.len(),
        });
    }
    let start = times[0];
    let last = times[times.len() - 1];
    // Span * rate can land a hair below an integer when the timestamps are
    // decimal fractions; absorb that before flooring.
    let steps = (last - start) * rate;
    let slack = T::of(1e-9) * steps.max(T::one());
    let count = (steps + slack).floor().to_usize().unwrap_or(0) + 1;

    let mut out = Vec::with_capacity(count);
    let mut j = 0;
    for i in 0..count {
        let t = start + T::of_usize(i) / rate;
        while j + 2 < times.len() && times[j + 1] <= t {
            j += 1;
        }
        let (t0, t1) = (times[j], times[j + 1]);
        let v = if t == t0 {
            values[j]
        } else if t >= t1 {
            values[j + 1]
        } else {
            let (x0, x1) = (values[j], values[j + 1]);
            x0 + (x1 - x0) * ((t - t0) / (t1 - t0))
        };
        out.push(v);
    }
    Ok(UniformSeries::new(rate, start, out))
}
