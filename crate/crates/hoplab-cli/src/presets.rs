//! Published parameter sets as configuration seeds.

use anyhow::{bail, Result};

use crate::config::Config;

pub const PRESET_NAMES: [&str; 4] = ["table1", "table2-vertical", "table2-foreaft", "table3"];

/// Expand a named preset into a configuration layer.
pub fn preset(name: &str) -> Result<Config> {
    let text = match name {
        // 1-DoF hopper model parameters. chi0 records the published drop
        // height; the default initial state is rest-length stance.
        "table1" => {
            "[template]\n\
             mu = 6.173\n\
             k = 1500\n\
             c = 3.2\n\
             rho = 0.18\n\
             gamma = 9.81\n\
             stance_gravity = false\n\
             kt = 5.5\n\
             chi0 = 0.28\n\
             [initial]\n\
             phase = stance\n\
             chi = 0.18\n\
             chidot = 0\n\
             [sweep]\n\
             gains = 4.5,5.0,5.5,6.0,6.5,7.0,7.5,8.0\n\
             apex_guess = 1.0\n\
             [cycle]\n\
             gains = 5.5,7.5\n\
             transient_hops = 10\n\
             hops = 21\n\
             [integrator]\n\
             max_time = 250\n\
             max_hops = 40\n"
        }
        // Vertical tripedal pronking: per-limb rest lengths and angles, RF
        // missing. pd_*_meta are the vendor PD set points (metadata).
        "table2-vertical" => {
            "[tripod]\n\
             mass = 6.173\n\
             gamma = 9.81\n\
             kss = 1500\n\
             beta_s = 0.25\n\
             kst = 7.5\n\
             missing = RF\n\
             rho_lf = 0.17\n\
             rho_lb = 0.138\n\
             rho_rf = 0.18\n\
             rho_rb = 0.18\n\
             theta_lf = 0.0\n\
             theta_lb = -0.15\n\
             theta_rf = 0.0\n\
             theta_rb = 0.2\n\
             hip_x = 0.2\n\
             hip_y = 0.1\n\
             z0 = 0.18\n\
             zdot0 = 0\n\
             [integrator]\n\
             max_time = 20\n\
             max_hops = 40\n"
        }
        // Fore-aft tripedal pronking as the planar virtual leg: per-limb rest
        // lengths and touchdown/liftoff angles, reduced by functional-limb
        // means at run time.
        "table2-foreaft" => {
            "[slip]\n\
             mass = 6.173\n\
             gamma = 9.81\n\
             kss = 1300\n\
             beta_s = 0.25\n\
             kst = 7.5\n\
             missing = RF\n\
             rho_lf = 0.18\n\
             rho_lb = 0.145\n\
             rho_rf = 0.18\n\
             rho_rb = 0.18\n\
             theta_td_lf = -0.1\n\
             theta_td_lb = -0.05\n\
             theta_td_rf = 0.0\n\
             theta_td_rb = 0.1\n\
             theta_lo_lf = -0.15\n\
             theta_lo_lb = -0.1\n\
             theta_lo_rf = 0.0\n\
             theta_lo_rb = 0.15\n\
             angle_p = 50\n\
             angle_d = 3\n\
             pd_p_meta = 2.0\n\
             pd_d_meta = 0.03\n\
             z0 = 0.20\n\
             ydot0 = 0.1\n\
             strides = 40\n\
             z_guess = 0.20\n\
             ydot_guess = 0.1\n\
             [energetics]\n\
             k_tau = 0.1\n\
             r_motor = 0.2\n\
             r_eff = 0.1\n\
             distance = 2.0\n\
             gains = 6.5,7.0,7.5,8.0\n\
             max_strides = 4000\n\
             [integrator]\n\
             max_time = 20\n"
        }
        // Quadrupedal fore-aft pronking: identical limbs, no missing limb.
        "table3" => {
            "[slip]\n\
             mass = 6.173\n\
             gamma = 9.81\n\
             kss = 800\n\
             beta_s = 0.25\n\
             kst = 7.5\n\
             missing = none\n\
             rho_lf = 0.18\n\
             rho_lb = 0.18\n\
             rho_rf = 0.18\n\
             rho_rb = 0.18\n\
             theta_td_lf = -0.05\n\
             theta_td_lb = -0.05\n\
             theta_td_rf = -0.05\n\
             theta_td_rb = -0.05\n\
             theta_lo_lf = -0.05\n\
             theta_lo_lb = -0.05\n\
             theta_lo_rf = -0.05\n\
             theta_lo_rb = -0.05\n\
             angle_p = 50\n\
             angle_d = 3\n\
             pd_p_meta = 2.0\n\
             pd_d_meta = 0.03\n\
             z0 = 0.20\n\
             ydot0 = 0.1\n\
             strides = 40\n\
             z_guess = 0.20\n\
             ydot_guess = 0.1\n\
             [tripod]\n\
             mass = 6.173\n\
             gamma = 9.81\n\
             kss = 800\n\
             beta_s = 0.25\n\
             kst = 7.5\n\
             missing = none\n\
             rho_lf = 0.18\n\
             rho_lb = 0.18\n\
             rho_rf = 0.18\n\
             rho_rb = 0.18\n\
             theta_lf = -0.05\n\
             theta_lb = -0.05\n\
             theta_rf = -0.05\n\
             theta_rb = -0.05\n\
             hip_x = 0.2\n\
             hip_y = 0.1\n\
             z0 = 0.18\n\
             zdot0 = 0\n\
             [energetics]\n\
             k_tau = 0.1\n\
             r_motor = 0.2\n\
             r_eff = 0.1\n\
             distance = 2.0\n\
             gains = 6.5,7.0,7.5,8.0\n\
             max_strides = 4000\n\
             [integrator]\n\
             max_time = 20\n"
        }
        other => bail!("unknown preset `{other}` (available: {})", PRESET_NAMES.join(", ")),
    };
    Config::parse(text, &format!("preset {name}"))
}
