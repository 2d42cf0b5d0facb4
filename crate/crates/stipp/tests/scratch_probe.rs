use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stipp::infogain::{proposal_information, MapState};
use stipp::kernels::{lattice_sites, linspace, product_grid, KernelParams, SpaceTimePoint};

#[test]
#[ignore]
fn probe_grid_snapped_submodularity() {
    for (noise, ell_s) in [(0.01, 30.0), (0.1, 30.0), (0.01, 100.0), (0.1, 100.0)] {
        let params = KernelParams::new(1.5, ell_s, 20.0, 1.0).unwrap();
        let sites = lattice_sites(&linspace(0.0, 500.0, 6), &linspace(0.0, 500.0, 6));
        let times = linspace(0.0, 100.0, 4);
        let queries = product_grid(&sites, &times);
        let mut violations = 0;
        let mut worst: f64 = 0.0;
        let total = 500;
        for seed in 0..total {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // committed sites and the proposal all live on the inducing grid
            let mut pick = |rng: &mut ChaCha8Rng| queries[rng.random_range(0..queries.len())];
            let all: Vec<SpaceTimePoint> = (0..10).map(|_| pick(&mut rng)).collect();
            let z = pick(&mut rng);
            let a = MapState::new(&all[..5], queries.clone(), params, noise).unwrap();
            let b = MapState::new(&all, queries.clone(), params, noise).unwrap();
            let (ga, _) = proposal_information(&a, &z, None);
            let (gb, _) = proposal_information(&b, &z, None);
            if ga < gb - 1e-10 {
                violations += 1;
                worst = worst.max(gb - ga);
            }
        }
        eprintln!("snapped: noise={noise} ell_s={ell_s}: violations {violations}/{total}, worst {worst:.6}");
    }
}
