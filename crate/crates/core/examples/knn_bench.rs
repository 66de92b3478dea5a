use rand::{Rng, SeedableRng};
use std::time::Instant;
use xtrap::dataio::EmbeddingSet;
use xtrap::simindex::{knn, KnnOptions, SimMeasure};

fn main() {
    let n: usize = std::env::args().nth(1).map_or(50_000, |s| s.parse().unwrap());
    let dim = 768;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let gen = |n: usize, p: &str, rng: &mut rand_chacha::ChaCha8Rng| {
        let data: Vec<f32> = (0..n * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        EmbeddingSet::from_parts(dim, (0..n).map(|i| format!("{p}{i}")).collect(), data).unwrap()
    };
    let t = Instant::now();
    let train = gen(n, "t", &mut rng);
    let test = gen(1000, "q", &mut rng);
    println!("gen {:?}", t.elapsed());
    let t = Instant::now();
    let r = knn(&test, &train, KnnOptions::new(100, SimMeasure::InnerProduct)).unwrap();
    println!("knn {:?} {}", t.elapsed(), r[0].neighbors[0].1);
}
