#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(pairs) = grouplink::io::parse_labeled_pairs(data) {
        let mut out = Vec::new();
        grouplink::io::write_labeled_pairs(&mut out, &pairs).unwrap();
        assert_eq!(grouplink::io::parse_labeled_pairs(out.as_slice()).unwrap(), pairs);
    }
});
