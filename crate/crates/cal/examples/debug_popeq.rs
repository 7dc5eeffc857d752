// scratch: compare predicted columns against the true next column set
use std::collections::BTreeMap;
use cal::columns_of_cells;
use cal::experiments::data::population_step;
use cal::network::{Network, SensorValue};
use cal::experiments::POPEQ_CONFIG;
use cal::config;

fn main() {
    let spec = config::topology_from_toml(POPEQ_CONFIG).unwrap();
    let mut net = Network::build(spec, 7).unwrap();
    let geom = *net.region("R1").unwrap().sequence_memory().geometry();
    let mut s = 0.5f64;
    let mut prev_pred: Option<cal::SparseBitVector> = None;
    let (mut n, mut missing, mut extra, mut perfect) = (0usize, 0usize, 0usize, 0usize);
    for i in 1..=3000 {
        let mut frame = BTreeMap::new();
        frame.insert("s".to_string(), SensorValue::Scalar(s));
        let out = net.tick(&frame).unwrap();
        let o = &out[0];
        if i > 2000 {
            if let Some(pred) = prev_pred.take() {
                let inter = pred.overlap(&o.y).unwrap();
                n += 1;
                missing += o.y.cardinality() - inter;
                extra += pred.cardinality() - inter;
                if pred == o.y {
                    perfect += 1;
                }
            }
        }
        prev_pred = Some(columns_of_cells(&geom, &o.z));
        s = population_step(s, 3.89);
    }
    println!(
        "n={n} avg_missing={:.2} avg_extra={:.2} perfect={perfect}",
        missing as f64 / n as f64,
        extra as f64 / n as f64
    );
}
