//! Writes a generated digit corpus as an IDX image/label pair.
//!
//! Usage: generate_demo_data <n> <seed> <images-out> <labels-out>

use sublabel::dataset::{serialize_idx_images, serialize_idx_labels};
use sublabel::simulate::{digit_corpus, CorpusConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.len() != 5 {
        eprintln!("usage: generate_demo_data <n> <seed> <images-out> <labels-out>");
        std::process::exit(2);
    }
    let n: usize = args[1].parse().expect("n must be an integer");
    let seed: u64 = args[2].parse().expect("seed must be an integer");
    let (images, labels) = digit_corpus(&CorpusConfig::new(n, seed));
    std::fs::write(&args[3], serialize_idx_images(&images)).expect("write images");
    std::fs::write(&args[4], serialize_idx_labels(&labels)).expect("write labels");
    println!("wrote {n} digits to {} / {}", args[3], args[4]);
}
