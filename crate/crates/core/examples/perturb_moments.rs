//! Perturb the age column of a sample hospital table and recover its mean
//! and variance from the noisy values alone.

use medshare::datastore::fixtures;
use medshare::perturb::{estimate_moments, perturb_table, NoiseSpec, PerturbationPolicy};
use medshare::seed::rng_for;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let table = fixtures::hospital_a();
    let ages = table.numeric_column("age")?;
    let truth = estimate_moments(&ages, &NoiseSpec::uniform(0.0)?)?;
    println!("original  mean {:.3}  variance {:.3}", truth.est_mean, truth.est_variance);

    for alpha in [2.0, 5.0, 10.0] {
        let policy = PerturbationPolicy::hospital(alpha)?;
        let released = perturb_table(&table, &policy, &mut rng_for(1, "example"))?;
        let noisy = released.numeric_column("age")?;
        let est = estimate_moments(&noisy, &NoiseSpec::uniform(alpha)?)?;
        println!(
            "alpha {alpha:>4}  mean {:.3}  variance {:.3}  first ages {:?}",
            est.est_mean,
            est.est_variance,
            noisy[..3].iter().map(|a| format!("{a:.1}")).collect::<Vec<_>>()
        );
    }

    // With many records the estimates settle on the truth.
    let xs = medshare::cli::stats::centered_column(20_000, 50.0, 10.0, &mut rng_for(2, "wide"));
    let spec = NoiseSpec::gaussian(8.0)?;
    let mut rng = rng_for(3, "noise");
    let zs: Vec<f64> = xs.iter().map(|x| x + medshare::perturb::sample_noise(&spec, &mut rng)).collect();
    let est = estimate_moments(&zs, &spec)?;
    println!("n=20000 sigma=8: mean {:.3} (50), variance {:.2} (~100)", est.est_mean, est.est_variance);
    Ok(())
}
