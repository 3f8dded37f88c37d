use eoratio::report::EvaluationRecord;
use eoratio_core::{
    evaluate, evaluate_grouped, risk_deciles, Cohort, Method, RiskModel, Subject, UniformModel,
};
use proptest::prelude::*;

fn record(data: &[(f64, bool)], lambda: f64, grouped: bool) -> EvaluationRecord {
    let t0 = data.iter().map(|d| d.0).fold(0.0, f64::max) * 0.8;
    let subjects = data
        .iter()
        .map(|&(z, e)| Subject::new(z, e, ()).unwrap())
        .collect();
    let cohort = Cohort::new(subjects, t0).unwrap();
    let model = UniformModel::new(lambda).unwrap();
    let report = evaluate(&cohort, &model).unwrap();
    if grouped {
        let methods = [Method::M0, Method::M3];
        let risks: Vec<f64> = cohort
            .subjects()
            .iter()
            .map(|s| model.risk(s.covariates(), t0).unwrap())
            .collect();
        let groups = evaluate_grouped(&cohort, &model, &risk_deciles(&risks), &methods).unwrap();
        EvaluationRecord::new(&report, &methods, groups)
    } else {
        EvaluationRecord::new(&report, &Method::ALL, Vec::new())
    }
}

fn cohort() -> impl Strategy<Value = Vec<(f64, bool)>> {
    prop::collection::vec((0.1f64..40.0, any::<bool>()), 2..120).prop_map(|mut d| {
        d[0] = (0.05, true);
        d
    })
}

proptest! {
    #[test]
    fn csv_round_trip_is_stable(data in cohort(), lambda in 40.0f64..400.0, grouped in any::<bool>()) {
        let first = record(&data, lambda, grouped).to_csv();
        let again = EvaluationRecord::from_csv(&first).unwrap().to_csv();
        prop_assert_eq!(first, again);
    }

    #[test]
    fn json_round_trip_is_exact(data in cohort(), lambda in 40.0f64..400.0) {
        let r = record(&data, lambda, false);
        let back = EvaluationRecord::from_json(&r.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, r);
    }
}
