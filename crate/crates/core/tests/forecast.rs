use periodauth::forecast::{fit, predict, FitConfig, ForecastModel, SeasonalitySpec, TrendKind};
use periodauth::synth::linear_seasonal;
use periodauth::{Error, TimeSeries};

fn config() -> FitConfig {
    FitConfig {
        seasonalities: vec![SeasonalitySpec::new(20.0, 3)],
        ..FitConfig::default()
    }
}

fn rmse(model: &ForecastModel, ts: &TimeSeries) -> f64 {
    (ts.iter().map(|(t, y)| (model.eval(t) - y).powi(2)).sum::<f64>() / ts.len() as f64).sqrt()
}

#[test]
fn reloaded_model_forecasts_identically() {
    let ts = linear_seasonal(200, 0.1, 5).unwrap();
    let model = fit(&ts, &config()).unwrap();
    let back = ForecastModel::from_json(&model.to_json().unwrap()).unwrap();
    assert_eq!(predict(&model, 50, 0.8, 500, 1).unwrap(), predict(&back, 50, 0.8, 500, 1).unwrap());
}

#[test]
fn forecast_follows_the_generator() {
    let ts = linear_seasonal(200, 0.1, 6).unwrap();
    let band = predict(&fit(&ts, &config()).unwrap(), 40, 0.8, 1000, 2).unwrap();
    let truth = linear_seasonal(240, 0.0, 0).unwrap();
    for (i, &t) in band.t.iter().enumerate() {
        let y = truth.y()[t as usize];
        assert!((band.yhat[i] - y).abs() < 0.3, "t {t}: {} vs {y}", band.yhat[i]);
    }
}

#[test]
fn gaps_barely_change_the_fit() {
    let ts = linear_seasonal(200, 0.1, 7).unwrap();
    let full = fit(&ts, &config()).unwrap();
    let sparse = ts.filter_index(|i| i % 5 != 2);
    let gappy = fit(&sparse, &config()).unwrap();
    let (a, b) = (rmse(&full, &ts), rmse(&gappy, &sparse));
    assert!((a - b).abs() < 0.25 * a, "{a} vs {b}");
}

#[test]
fn logistic_trend_saturates_below_capacity() {
    let y: Vec<f64> = (0..300).map(|i| 10.0 / (1.0 + (-(i as f64 - 150.0) / 20.0).exp())).collect();
    let ts = TimeSeries::from_values(y).unwrap();
    let cfg = FitConfig {
        trend: TrendKind::Logistic,
        capacity: Some(10.0),
        ..FitConfig::default()
    };
    let band = predict(&fit(&ts, &cfg).unwrap(), 100, 0.8, 200, 3).unwrap();
    assert!(band.yhat.iter().all(|&v| v <= 10.0 + 1e-9 && v > 9.0), "{:?}", &band.yhat[..5]);
}

#[test]
fn too_few_samples_is_underdetermined() {
    let ts = linear_seasonal(10, 0.1, 1).unwrap();
    assert!(matches!(fit(&ts, &config()), Err(Error::Underdetermined { .. })));
}
