use oafl::harness::*;

fn main() {
    let cfg_json = std::env::args().nth(1).unwrap();
    let cfg = ExperimentConfig::from_json(&std::fs::read_to_string(cfg_json).unwrap()).unwrap();
    let out = run_experiment(&cfg).unwrap();
    let n = out.constants.model_len as f64;
    println!("round, mse, 2N*D, ratio, d_system, gap, bound");
    for rec in out.records.iter() {
        let budget = 2.0 * n * rec.d_system;
        println!(
            "{}, {:.4e}, {:.4e}, {:.3}, {:.4e}, {:.4e}, {:.4e}",
            rec.round,
            rec.mse,
            budget,
            rec.mse / budget,
            rec.d_system,
            rec.train_loss - out.constants.loss_star,
            rec.bound
        );
    }
}
