//! Compares analytic gradients of the data loss and both penalties with
//! central finite differences on a tiny model.
//!
//!     cargo run --release --example gradient_check

use tkg_continual::dataset::Quadruple;
use tkg_continual::model::{init_params, loss_and_grads, Grads, History, ModelParams, TrainingExample};
use tkg_continual::regularizer::{ewc_penalty, l2_penalty, ConsolidationStore, EwcVariant, FisherRecord, ParamSnapshot, RegConfig};

fn max_rel_error(params: &ModelParams, analytic: &Grads, f: impl Fn(&ModelParams) -> f64) -> f64 {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..params.values().len() {
        let mut plus = params.clone();
        plus.values_mut()[i] += h;
        let mut minus = params.clone();
        minus.values_mut()[i] -= h;
        let numeric = (f(&plus) - f(&minus)) / (2.0 * h);
        let a = analytic.values()[i];
        worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8));
    }
    worst
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = init_params(4, 7, 3, 42)?;
    let batch = vec![
        TrainingExample { quad: Quadruple::new(0, 1, 2, 0), history: History::new(vec![3, 4]) },
        TrainingExample { quad: Quadruple::new(5, 2, 6, 0), history: History::default() },
    ];
    let (_, g) = loss_and_grads(&params, &batch, None)?;
    let data = max_rel_error(&params, &g, |p| loss_and_grads(p, &batch, None).unwrap().0);
    println!("data loss   max relative error {data:.2e}");

    let anchor = init_params(4, 7, 3, 7)?;
    let mut store = ConsolidationStore::new();
    for task in 0..2 {
        let fisher = (0..anchor.values().len()).map(|i| ((i * 7 + task) % 5) as f64 * 0.3).collect();
        store.push(ParamSnapshot::capture(task, &anchor), FisherRecord { task, values: fisher })?;
    }
    let reg = RegConfig::default();
    let (_, g) = ewc_penalty(&params, &store, EwcVariant::Decayed, &reg, 2)?;
    let ewc = max_rel_error(&params, &g, |p| ewc_penalty(p, &store, EwcVariant::Decayed, &reg, 2).unwrap().0);
    println!("EWC penalty max relative error {ewc:.2e}");

    let snap = ParamSnapshot::capture(1, &anchor);
    let (_, g) = l2_penalty(&params, &snap, 10.0)?;
    let l2 = max_rel_error(&params, &g, |p| l2_penalty(p, &snap, 10.0).unwrap().0);
    println!("L2 penalty  max relative error {l2:.2e}");
    Ok(())
}
