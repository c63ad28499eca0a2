#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(splits) = grouplink::io::parse_splits(data) {
        let mut out = Vec::new();
        grouplink::io::write_splits(&mut out, &splits).unwrap();
        assert_eq!(grouplink::io::parse_splits(out.as_slice()).unwrap(), splits);
    }
});
