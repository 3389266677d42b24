use crate::error::SimError;

/// Linear range estimate: distance per unit energy times pack capacity.
pub fn range_extrapolate(capacity_kwh: f64, energy_kwh: f64, distance_km: f64) -> Result<f64, SimError> {
    if !(capacity_kwh > 0.0 && capacity_kwh.is_finite()) {
        return Err(SimError::Domain("capacity must be positive"));
    }
    if !(energy_kwh > 0.0 && energy_kwh.is_finite()) {
        return Err(SimError::Domain("battery energy must be positive"));
    }
    if !(distance_km > 0.0 && distance_km.is_finite()) {
        return Err(SimError::Domain("distance must be positive"));
    }
    Ok(capacity_kwh * distance_km / energy_kwh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn full_pack_per_run_returns_the_distance() {
        assert_relative_eq!(range_extrapolate(54.28, 54.28, 12.5).unwrap(), 12.5);
    }

    #[test]
    fn reference_triple() {
        assert_relative_eq!(range_extrapolate(54.28, 1.9, 11.764).unwrap(), 336.08, max_relative = 5e-3);
    }

    #[test]
    fn nonpositive_inputs_are_domain_errors() {
        assert!(matches!(range_extrapolate(54.28, 0.0, 10.0), Err(SimError::Domain(_))));
        assert!(matches!(range_extrapolate(-1.0, 1.0, 10.0), Err(SimError::Domain(_))));
        assert!(matches!(range_extrapolate(54.28, 1.0, 0.0), Err(SimError::Domain(_))));
    }
}
