//! Physical constants in the crate's unit system (meV, nm, ps, K, T).

/// Constants used across modules. `CODATA` is the only instance the crate
/// uses; the struct exists so the values travel together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysConstants {
    /// Reduced Planck constant, meV·ps.
    pub hbar: f64,
    /// Boltzmann constant, meV/K.
    pub kb: f64,
    /// Bohr magneton, meV/T.
    pub mu_b: f64,
    /// Planck constant, meV·s.
    pub h: f64,
    /// ħ²/(2mₑ), meV·nm².
    pub c_kin: f64,
}

impl PhysConstants {
    pub const CODATA: PhysConstants = PhysConstants {
        hbar: 0.658_211_956_9,
        kb: 0.086_173_33,
        mu_b: 0.057_883_82,
        h: 4.135_667_696e-12,
        c_kin: 38.0998,
    };

    /// Cross-checks the table against SI values. Returns the largest
    /// relative inconsistency found.
    pub fn consistency(&self) -> f64 {
        let hbar_from_h = self.h / (2.0 * std::f64::consts::PI) * 1e12;
        let c_kin_si = si::HBAR * si::HBAR / (2.0 * si::M_E) / si::MEV * 1e18;
        let kb_si = si::KB / si::MEV;
        let mub_si = si::MU_B / si::MEV;
        [
            (hbar_from_h, self.hbar),
            (c_kin_si, self.c_kin),
            (kb_si, self.kb),
            (mub_si, self.mu_b),
        ]
        .iter()
        .map(|(a, b)| ((a - b) / b).abs())
        .fold(0.0, f64::max)
    }

    /// μB/h in GHz/T.
    pub fn mu_b_over_h_ghz(&self) -> f64 {
        self.mu_b / self.h * 1e-9
    }
}

/// SI values used where a formula is naturally written in SI.
pub mod si {
    pub const E_CHARGE: f64 = 1.602_176_634e-19;
    pub const HBAR: f64 = 1.054_571_817e-34;
    pub const EPS0: f64 = 8.854_187_812_8e-12;
    pub const C: f64 = 299_792_458.0;
    pub const M_E: f64 = 9.109_383_701_5e-31;
    pub const KB: f64 = 1.380_649e-23;
    pub const MU_B: f64 = 9.274_010_078_3e-24;
    /// One meV in joules.
    pub const MEV: f64 = E_CHARGE * 1e-3;
}
