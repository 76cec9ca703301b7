//! Unit helpers. Simulation state is SI (m, s, m/s); the protocol speaks km/h.

pub const KMH_PER_MS: f64 = 3.6;

/// Largest permitted lateral deviation from the ideal trajectory, m.
pub const MAX_LATERAL_OFFSET: f64 = 0.1;

/// Permitted VUT over-speed above the test speed, km/h.
pub const SPEED_TOLERANCE_KMH: f64 = 1.0;

pub fn kmh_to_ms(kmh: f64) -> f64 {
    kmh / KMH_PER_MS
}

pub fn ms_to_kmh(ms: f64) -> f64 {
    ms * KMH_PER_MS
}

pub fn deg_to_rad(deg: f64) -> f64 {
    deg.to_radians()
}

pub fn rad_to_deg(rad: f64) -> f64 {
    rad.to_degrees()
}
