//! Runs the crossing-bundle ROC experiment and prints one line per filter
//! setting. Pass a JSON config path to override the defaults.

use std::time::Instant;

use wmgf_core::pipeline::{run_experiment, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config: ExperimentConfig = match std::env::args().nth(1) {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    let start = Instant::now();
    let result = run_experiment(&config)?;
    println!(
        "graph: {} vertices, {} edges, {} isolated",
        result.build_report.n_vertices, result.build_report.n_edges, result.build_report.n_isolated
    );
    for m in &result.methods {
        println!(
            "{:<22} auc {:.4}  mean per-phantom {:.4}",
            m.label(),
            m.auc,
            m.mean_phantom_auc()
        );
    }
    println!("elapsed {:.1} s", start.elapsed().as_secs_f64());
    Ok(())
}
