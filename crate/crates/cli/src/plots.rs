//! Plot-data exports: exactly the series needed to redraw the four figures.
//!
//! * `fig1a_mean.csv`, `fig1b_variance.csv`, `fig1c_hitting.csv`, `fig1d_capacity.csv`,
//!   `fig1e_qq.csv`: the five validation panels (from `validate`).
//! * `fig2_control.csv`, `fig2_threshold.csv`: control field and threshold curve at mid-horizon
//!   (from `solve`).
//! * `fig3_value.csv`: value function at `t = 0` (from `solve`).
//! * `fig4_trajectories.csv`: mean autonomy under the three policies (from `compare`).

use autolab_core::artifact::ArtifactHeader;
use autolab_core::policy::Trajectories;
use autolab_core::validation::ValidationSeries;
use autolab_core::HjbSolution;

use crate::output::Outputs;
use crate::CliError;

pub fn write_validation_figures(out: &mut Outputs, h: &ArtifactHeader, s: &ValidationSeries) -> Result<(), CliError> {
    let mean: Vec<Vec<f64>> = s.moments.iter().map(|m| vec![m.i, m.t, m.mean, m.mean_theory]).collect();
    out.write_table("fig1a_mean.csv", h, &["I", "t", "mean_A", "mean_A_theory"], &mean)?;
    let var: Vec<Vec<f64>> = s.moments.iter().map(|m| vec![m.i, m.t, m.variance, m.variance_theory, m.variance_se]).collect();
    out.write_table("fig1b_variance.csv", h, &["I", "t", "var_A", "var_A_theory", "var_A_bootstrap_se"], &var)?;
    let hit: Vec<Vec<f64>> = s.hitting_by_information.iter().map(|p| vec![p.i, p.simulated, p.theory]).collect();
    out.write_table("fig1c_hitting.csv", h, &["I", "tau_simulated", "tau_theory"], &hit)?;
    let cap: Vec<Vec<f64>> = s.hitting_by_capacity.iter().map(|p| vec![p.wm, p.simulated, p.theory]).collect();
    out.write_table("fig1d_capacity.csv", h, &["wm", "tau_simulated", "tau_theory"], &cap)?;
    let qq: Vec<Vec<f64>> = s.qq.iter().map(|&(x, y)| vec![x, y]).collect();
    out.write_table("fig1e_qq.csv", h, &["theoretical_quantile", "sample_quantile"], &qq)
}

pub fn write_solution_figures(out: &mut Outputs, h: &ArtifactHeader, sol: &HjbSolution) -> Result<(), CliError> {
    let g = &sol.grid;
    let mid = sol.nearest_slice(0.5 * sol.params.horizon);
    let t_mid = sol.times[mid];
    let h_mid = h.clone().with("t", format!("{t_mid:?}"));
    let mut control = Vec::with_capacity(g.n_a * g.n_i);
    let mut value = Vec::with_capacity(g.n_a * g.n_i);
    for j in 0..g.n_a {
        for k in 0..g.n_i {
            control.push(vec![g.a_at(j), g.i_at(k), sol.control_node(mid, j, k)]);
            value.push(vec![g.a_at(j), g.i_at(k), sol.value_node(0, j, k)]);
        }
    }
    out.write_table("fig2_control.csv", &h_mid, &["A", "I", "u"], &control)?;
    let curve: Vec<Vec<f64>> = sol.threshold_curve(t_mid).into_iter().map(|(a, i)| vec![a, i]).collect();
    out.write_table("fig2_threshold.csv", &h_mid, &["A", "I_threshold"], &curve)?;
    out.write_table("fig3_value.csv", &h.clone().with("t", "0.0"), &["A", "I", "V"], &value)
}

pub fn write_trajectory_figure(out: &mut Outputs, h: &ArtifactHeader, tr: &Trajectories) -> Result<(), CliError> {
    let rows: Vec<Vec<f64>> =
        (0..tr.times.len()).map(|k| vec![tr.times[k], tr.optimal[k], tr.max_transparency[k], tr.no_transparency[k]]).collect();
    out.write_table("fig4_trajectories.csv", h, &["t", "optimal", "max_transparency", "no_transparency"], &rows)
}
