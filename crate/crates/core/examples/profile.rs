use std::time::Instant;
fn main() {
    let seed = 7u64;
    for spec in ["cyclic:8", "dihedral:7", "dihedral:9", "pgl2:3", "pgl2:5"] {
        let t0 = Instant::now();
        let (group, _) = qexlab::groups::parse_group_spec(spec).unwrap();
        qexlab::groups::validate_group(&group, seed).unwrap();
        println!("laws {spec}: {:?}", t0.elapsed());
    }
    for (spec, gens) in [("cyclic:5", "1,4"), ("dihedral:5", "random:4:11")] {
        let t0 = Instant::now();
        let (group, _) = qexlab::groups::parse_group_spec(spec).unwrap();
        let generators = qexlab::groups::parse_generator_spec(gens, &group).unwrap();
        let report = qexlab::cayley::spectrum(&qexlab::cayley::cayley_operator(&group, &generators).unwrap(), true).unwrap();
        let t = qexlab::qexpander::step_superoperator(&group, &generators).unwrap();
        let _ = qexlab::qexpander::t_spectrum_certificate(&group, &t, &report).unwrap();
        println!("tspec {spec}: {:?}", t0.elapsed());
    }
    for spec in ["cyclic:8", "pgl2:3"] {
        let t0 = Instant::now();
        let p = qexlab::cli::build_pipeline(spec, "all", None, seed).unwrap();
        println!("all-pipeline {spec}: {:?}", t0.elapsed());
        let t0 = Instant::now();
        let nb = (p.group.order() as f64).log2();
        let eps = qexlab::extractor::expander_to_extractor_params(p.gap.sigma2, 2.0);
        let r = qexlab::extractor::extractor_check(&p.expander, nb - 2.0, eps, 10, seed).unwrap();
        println!("extractor-check {spec}: {:?} pass={}", t0.elapsed(), r.pass);
    }
    let t0 = Instant::now();
    let (c, w) = qexlab::qszk::entropy_distance_grid_check(3, 64);
    println!("grid: {:?} ({c} spectra, worst {w:.2e})", t0.elapsed());
    let t0 = Instant::now();
    let _ = qexlab::cli::build_circuit_experiment().unwrap();
    println!("build-circuit: {:?}", t0.elapsed());
    let t0 = Instant::now();
    let _ = qexlab::cli::qsd_experiment().unwrap();
    println!("qsd-exp: {:?}", t0.elapsed());
}
