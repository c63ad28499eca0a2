#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = grouplink::io::parse_companies(data) {
        let mut out = Vec::new();
        grouplink::io::write_companies(&mut out, &rows).unwrap();
        assert_eq!(grouplink::io::parse_companies(out.as_slice()).unwrap(), rows);
    }
});
