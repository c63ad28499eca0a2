#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(corpus) = grouplink::datagen::parse_base_corpus(data) {
        let mut out = Vec::new();
        grouplink::datagen::write_base_corpus(&mut out, &corpus.seeds).unwrap();
        assert_eq!(grouplink::datagen::parse_base_corpus(out.as_slice()).unwrap().seeds, corpus.seeds);
    }
});
