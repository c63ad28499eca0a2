#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = grouplink::io::parse_prediction_rows(data);
    if let Ok(imported) = grouplink::matcher::import_predictions(data, &[]) {
        assert!(imported.predictions.windows(2).all(|w| w[0].pair < w[1].pair));
    }
});
