use dynpsn::features::{
    apply_pipeline, compute_gcm, fit_pca, flatten_upper, write_features, ColumnFilter, Correlation, PcaScope,
    PipelineConfig,
};
use dynpsn::graphlets::{count_dynamic_orbits, enumerate_dynamic_orbits, CountConfig, Gdvm};
use dynpsn::psn::{build_dynamic_psn, derive_event_stream};
use dynpsn::structure::{generate_synthetic_corpus, SynthConfig};
use ndarray::Array2;
use proptest::prelude::*;

fn count_matrix() -> impl Strategy<Value = Array2<f64>> {
    (2usize..15, 1usize..12).prop_flat_map(|(r, c)| {
        prop::collection::vec(0u32..6, r * c)
            .prop_map(move |v| Array2::from_shape_vec((r, c), v.into_iter().map(f64::from).collect()).unwrap())
    })
}

fn dense_matrix() -> impl Strategy<Value = Array2<f64>> {
    (3usize..14, 2usize..9).prop_flat_map(|(r, c)| {
        prop::collection::vec(-5.0..5.0f64, r * c).prop_map(move |v| Array2::from_shape_vec((r, c), v).unwrap())
    })
}

proptest! {
    #[test]
    fn gcm_is_a_correlation_matrix(m in count_matrix(), pearson in any::<bool>()) {
        let kind = if pearson { Correlation::Pearson } else { Correlation::Spearman };
        let g = compute_gcm(&m, kind).unwrap().matrix;
        let c = m.ncols();
        for a in 0..c {
            prop_assert!((g[[a, a]] - 1.0).abs() <= 1e-12);
            for b in 0..c {
                prop_assert!((g[[a, b]] - g[[b, a]]).abs() <= 1e-12);
                prop_assert!((-1.0..=1.0).contains(&g[[a, b]]));
            }
        }
        let flat = flatten_upper(&compute_gcm(&m, kind).unwrap());
        prop_assert_eq!(flat.len(), c * (c - 1) / 2);
    }

    #[test]
    fn pca_keeps_the_fewest_components(x in dense_matrix(), retain in 0.5..0.999f64) {
        let p = match fit_pca(&x, retain) {
            Ok(p) => p,
            Err(_) => return Ok(()), // all rows equal
        };
        let ratios = &p.explained_variance_ratio;
        prop_assert!(ratios.iter().sum::<f64>() <= 1.0 + 1e-9);
        prop_assert!(ratios.windows(2).all(|w| w[0] >= w[1] - 1e-12));
        prop_assert!(p.retained_variance() >= retain - 1e-9);
        let before: f64 = ratios[..p.d() - 1].iter().sum();
        prop_assert!(before < retain);

        // rows of the component matrix are orthonormal
        let gram = p.components.dot(&p.components.t());
        for i in 0..p.d() {
            for j in 0..p.d() {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((gram[[i, j]] - want).abs() < 1e-9);
            }
        }

        // score variance along each component reproduces its ratio, and
        // reconstruction loses exactly the discarded variance
        let z = p.transform(&x).unwrap();
        let mean = x.mean_axis(ndarray::Axis(0)).unwrap();
        let total: f64 = x.rows().into_iter().map(|r| (&r - &mean).mapv(|v| v * v).sum()).sum();
        for j in 0..p.d() {
            let var = z.column(j).mapv(|v| v * v).sum();
            prop_assert!((var / total - ratios[j]).abs() < 1e-9);
        }
        let err = (&x - &p.reconstruct(&z)).mapv(|v| v * v).sum();
        prop_assert!(err <= (1.0 - p.retained_variance()) * total + 1e-9 * total);
    }
}

#[test]
fn pca_in_single_precision() {
    let x = Array2::from_shape_fn((8, 3), |(i, j)| (i as f32) * [1.0, 0.5, -2.0][j] + if j == 1 { (i % 2) as f32 } else { 0.0 });
    let p = fit_pca(&x, 0.9f32).unwrap();
    assert!(p.retained_variance() >= 0.9 - 1e-5);
}

fn synthetic_gdvms(per_class: usize) -> Vec<Gdvm> {
    let corpus = generate_synthetic_corpus::<f64>(&SynthConfig {
        per_class,
        class_floor: per_class,
        length_range: (30, 40),
        ..SynthConfig::default()
    })
    .unwrap();
    let table = enumerate_dynamic_orbits(4, 6).unwrap();
    corpus
        .iter()
        .map(|d| {
            let s = derive_event_stream(&build_dynamic_psn(d, 5, 6.0).unwrap());
            count_dynamic_orbits(&s, &table, &CountConfig::default(), &d.id).unwrap()
        })
        .collect()
}

#[test]
fn pipeline_on_synthetic_counts() {
    let gdvms = synthetic_gdvms(6);
    let filter = ColumnFilter::fit(&gdvms).unwrap();
    let c = filter.len();
    assert!(c > 10 && c < 3727);

    let cfg = PipelineConfig::default();
    let a = apply_pipeline::<f64>(&gdvms, &cfg).unwrap();
    let b = apply_pipeline::<f64>(&gdvms, &cfg).unwrap();
    let pca = a.pca.as_ref().unwrap();
    assert_eq!(pca.input_dim(), c * (c - 1) / 2);
    assert!(pca.retained_variance() >= 0.9);
    assert_eq!(a.matrix.dim(), (gdvms.len(), pca.d()));

    let bytes = |fs: &dynpsn::FeatureSet| {
        let mut buf = Vec::new();
        write_features(&mut buf, &fs.ids, &fs.matrix).unwrap();
        fs.pca.as_ref().unwrap().write(&mut buf).unwrap();
        buf
    };
    assert_eq!(bytes(&a), bytes(&b));

    let fold = apply_pipeline::<f64>(&gdvms, &PipelineConfig { scope: PcaScope::Fold, ..cfg }).unwrap();
    assert!(fold.pca.is_none());
    assert_eq!(fold.matrix.ncols(), c * (c - 1) / 2);
}
