//! Unit conversions shared by the simulator and the MILP builder.

/// Kilojoules per kilowatt-hour.
pub const KJ_PER_KWH: f64 = 3600.0;
/// Kilojoules per kBtu.
pub const KJ_PER_KBTU: f64 = 1055.06;
/// kBtu per kilowatt-hour.
pub const KBTU_PER_KWH: f64 = 3.41214;

/// Energy in kJ delivered by `kw` over `hours`.
pub fn kw_to_kj(kw: f64, hours: f64) -> f64 {
    kw * hours * KJ_PER_KWH
}

pub fn kbtu_to_kj(kbtu: f64) -> f64 {
    kbtu * KJ_PER_KBTU
}

/// Heat in kBtu delivered by `kw` over `hours`.
pub fn kw_to_kbtu(kw: f64, hours: f64) -> f64 {
    kw * hours * KBTU_PER_KWH
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions() {
        assert_eq!(kw_to_kj(2.0, 0.25), 1800.0);
        assert!((kbtu_to_kj(1.0) - 1055.06).abs() < 1e-12);
        assert!((kw_to_kbtu(1.0, 1.0) - 3.41214).abs() < 1e-12);
        // kWh -> kJ -> kBtu agrees with the direct factor to 5 digits.
        assert!((KJ_PER_KWH / KJ_PER_KBTU - KBTU_PER_KWH).abs() < 1e-4);
    }
}
