use std::collections::BTreeMap;
use std::path::PathBuf;

use jqf_core::codec::{parse_quant_tables, HuffmanSpec};
use jqf_core::{
    decode, encode, psnr, scale_table, standard_tables, ComponentKind, EncodeOptions, JpegBlob, QuantTable, RasterImage,
    Subsampling,
};
use proptest::prelude::*;
use serde::Deserialize;
use zune_core::bytestream::ZCursor;
use zune_jpeg::JpegDecoder;

#[derive(Deserialize)]
struct Reference {
    sizes: BTreeMap<String, BTreeMap<String, usize>>,
    q50_tables_natural: BTreeMap<String, Vec<u8>>,
}

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn reference() -> Reference {
    let text = std::fs::read_to_string(root().join("tests/fixtures/reference_jpeg.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn eval_dir() -> PathBuf {
    root().join("../../data/corpus/eval")
}

fn eval_images() -> Vec<(String, RasterImage)> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(eval_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "png"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, RasterImage::load(&p).unwrap())
        })
        .collect()
}

fn third_party_decode(bytes: &[u8]) -> RasterImage {
    let mut dec = JpegDecoder::new(ZCursor::new(bytes.to_vec()));
    let pixels = dec.decode().expect("third-party decoder accepts the stream");
    let (w, h) = dec.dimensions().unwrap();
    match pixels.len() / (w * h) {
        1 => RasterImage::gray(w, h, pixels).unwrap(),
        3 => RasterImage::rgb(w, h, pixels).unwrap(),
        n => panic!("unexpected channel count {n}"),
    }
}

fn std_at(q: u8) -> (QuantTable, QuantTable) {
    let (l, c) = standard_tables();
    (scale_table(&l, q).unwrap(), scale_table(&c, q).unwrap())
}

/// DHT payloads (class, id, spec) in stream order.
fn huffman_segments(bytes: &[u8]) -> Vec<(u8, u8, HuffmanSpec)> {
    let mut out = Vec::new();
    let mut pos = 2;
    while pos + 4 <= bytes.len() && bytes[pos] == 0xFF {
        let marker = bytes[pos + 1];
        let len = u16::from_be_bytes([bytes[pos + 2], bytes[pos + 3]]) as usize;
        if marker == 0xDA {
            break;
        }
        if marker == 0xC4 {
            let mut p = pos + 4;
            while p < pos + 2 + len {
                let (class, id) = (bytes[p] >> 4, bytes[p] & 15);
                let counts: [u8; 16] = bytes[p + 1..p + 17].try_into().unwrap();
                let n: usize = counts.iter().map(|&c| c as usize).sum();
                let symbols = bytes[p + 17..p + 17 + n].to_vec();
                out.push((class, id, HuffmanSpec { counts, symbols }));
                p += 17 + n;
            }
        }
        pos += 2 + len;
    }
    out
}

fn fixture(name: &str) -> Vec<u8> {
    std::fs::read(root().join("tests/fixtures/reference_jpeg").join(name)).unwrap()
}

#[test]
fn scaled_tables_match_reference_encoder_dqt() {
    for q in [35u8, 50, 75, 95] {
        let (luma, chroma) = std_at(q);
        let colour = parse_quant_tables(&fixture(&format!("astronaut_0_q{q}.jpg"))).unwrap();
        assert_eq!(colour, vec![(0, *luma.values()), (1, *chroma.values())], "Q{q}");
        let gray = parse_quant_tables(&fixture(&format!("camera_0_q{q}.jpg"))).unwrap();
        assert_eq!(gray, vec![(0, *luma.values())], "gray Q{q}");
    }
    let r = reference();
    let (l, c) = standard_tables();
    assert_eq!(r.q50_tables_natural["0"], l.values().to_vec());
    assert_eq!(r.q50_tables_natural["1"], c.values().to_vec());
}

#[test]
fn embedded_tables_equal_supplied_tables() {
    let (_, img) = &eval_images()[0];
    for q in [35u8, 50, 75, 95] {
        let (luma, chroma) = std_at(q);
        let blob = encode(img, &luma, &chroma, &EncodeOptions::default()).unwrap();
        let tables = parse_quant_tables(blob.as_bytes()).unwrap();
        assert_eq!(tables, vec![(0, *luma.values()), (1, *chroma.values())]);
    }
}

#[test]
fn huffman_tables_match_reference_encoder() {
    let segs = huffman_segments(&fixture("astronaut_0_q75.jpg"));
    let want = [
        (0, 0, HuffmanSpec::dc_luma()),
        (1, 0, HuffmanSpec::ac_luma()),
        (0, 1, HuffmanSpec::dc_chroma()),
        (1, 1, HuffmanSpec::ac_chroma()),
    ];
    for w in &want {
        assert!(segs.contains(w), "missing table class {} id {}", w.0, w.1);
    }
    let (_, img) = &eval_images()[0];
    let (l, c) = std_at(75);
    let ours = huffman_segments(encode(img, &l, &c, &EncodeOptions::default()).unwrap().as_bytes());
    assert_eq!(ours.len(), 4);
    for s in &ours {
        assert!(want.contains(s));
    }
}

#[test]
fn sizes_track_reference_encoder_and_decode_elsewhere() {
    let reference = reference();
    let mut checked = 0;
    for (name, img) in eval_images() {
        for (q, want) in &reference.sizes[&name] {
            let q: u8 = q.parse().unwrap();
            let (l, c) = std_at(q);
            let blob = encode(&img, &l, &c, &EncodeOptions::default()).unwrap();
            let ratio = blob.size_bytes() as f64 / *want as f64;
            assert!((0.9..=1.1).contains(&ratio), "{name} Q{q}: {} vs {want}", blob.size_bytes());
            let theirs = third_party_decode(blob.as_bytes());
            let ours = blob.decode().unwrap();
            let p_theirs = psnr(&img, &theirs).unwrap().value;
            let p_ours = psnr(&img, &ours).unwrap().value;
            assert!((p_theirs - p_ours).abs() < 0.5, "{name} Q{q}: {p_ours} vs {p_theirs}");
            checked += 1;
        }
    }
    assert!(checked >= 60);
}

#[test]
fn decoder_reads_reference_files() {
    let images: BTreeMap<String, RasterImage> = eval_images().into_iter().collect();
    for stem in ["astronaut_0", "camera_0"] {
        let original = &images[&format!("{stem}.png")];
        for q in [35, 50, 75, 95] {
            let bytes = fixture(&format!("{stem}_q{q}.jpg"));
            let ours = decode(&bytes).unwrap();
            let theirs = third_party_decode(&bytes);
            let d = psnr(original, &ours).unwrap().value - psnr(original, &theirs).unwrap().value;
            assert!(d.abs() < 0.5, "{stem} Q{q}: {d}");
        }
    }
}

#[test]
fn coarser_tables_give_smaller_files() {
    let (l, c) = std_at(50);
    let doubled = QuantTable::from_clamped(l.values().map(|v| 2 * i64::from(v)), ComponentKind::Luminance);
    let images = eval_images();
    let exceptions = images
        .iter()
        .filter(|(_, img)| {
            let a = encode(img, &l, &c, &EncodeOptions::default()).unwrap().size_bytes();
            let b = encode(img, &doubled, &c, &EncodeOptions::default()).unwrap().size_bytes();
            b >= a
        })
        .count();
    assert!(images.len() >= 20);
    assert!(exceptions <= 1, "{exceptions} images grew");
}

#[test]
fn finest_table_reconstructs_best() {
    let (_, img) = &eval_images()[3];
    let ones = QuantTable::uniform(1, ComponentKind::Luminance).unwrap();
    let ones_c = QuantTable::uniform(1, ComponentKind::Chrominance).unwrap();
    let (l, c) = std_at(50);
    let fine = encode(img, &ones, &ones_c, &EncodeOptions::default()).unwrap().decode().unwrap();
    let coarse = encode(img, &l, &c, &EncodeOptions::default()).unwrap().decode().unwrap();
    assert!(psnr(img, &fine).unwrap().value > psnr(img, &coarse).unwrap().value);
}

#[test]
fn uniform_gray_round_trips_within_one_level() {
    for value in [0u8, 17, 128, 255] {
        let img = RasterImage::filled(37, 21, value).unwrap();
        let (l, c) = std_at(75);
        let out = encode(&img, &l, &c, &EncodeOptions::default()).unwrap().decode().unwrap();
        assert!(out.data().iter().all(|&v| (i16::from(v) - i16::from(value)).abs() <= 1));
    }
}

#[test]
fn encoding_is_deterministic_for_both_subsamplings() {
    let (_, img) = &eval_images()[1];
    let (l, c) = std_at(80);
    for subsampling in [Subsampling::S420, Subsampling::S444] {
        let o = EncodeOptions { subsampling };
        let a = encode(img, &l, &c, &o).unwrap();
        assert_eq!(a, encode(img, &l, &c, &o).unwrap());
        third_party_decode(a.as_bytes());
    }
}

#[test]
fn malformed_streams_are_rejected() {
    let minimal = JpegBlob::new(vec![0xFF, 0xD8, 0xFF, 0xD9]).unwrap();
    assert_eq!(minimal.size_bytes(), 4);
    assert!(minimal.decode().is_err());
    assert!(JpegBlob::new(vec![0xFF, 0xD8]).is_err());
    let (_, img) = &eval_images()[0];
    let (l, c) = std_at(50);
    let bytes = encode(img, &l, &c, &EncodeOptions::default()).unwrap().into_bytes();
    for cut in [3, 20, 200, bytes.len() / 2, bytes.len() - 3] {
        assert!(decode(&bytes[..cut]).is_err(), "cut at {cut}");
    }
    let tiny = RasterImage::filled(7, 64, 0).unwrap();
    assert!(encode(&tiny, &l, &c, &EncodeOptions::default()).is_err());
}

fn odd_image(w: usize, h: usize, seed: u8) -> RasterImage {
    let data = (0..w * h * 3)
        .map(|i| ((i * 31 + (i / 3) % w * 7) as u8).wrapping_add(seed))
        .collect();
    RasterImage::rgb(w, h, data).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn arbitrary_tables_are_embedded_and_decodable(
        luma in proptest::array::uniform32(1u8..=255),
        tail in proptest::array::uniform32(1u8..=255),
        w in 8usize..70, h in 8usize..70, seed in any::<u8>(),
    ) {
        let mut values = [0u8; 64];
        values[..32].copy_from_slice(&luma);
        values[32..].copy_from_slice(&tail);
        let l = QuantTable::from_u8(values, ComponentKind::Luminance).unwrap();
        let (_, c) = std_at(60);
        let img = odd_image(w, h, seed);
        let blob = encode(&img, &l, &c, &EncodeOptions::default()).unwrap();
        prop_assert_eq!(parse_quant_tables(blob.as_bytes()).unwrap()[0], (0, values));
        let ours = blob.decode().unwrap();
        prop_assert_eq!((ours.width(), ours.height()), (w, h));
        let theirs = third_party_decode(blob.as_bytes());
        prop_assert_eq!((theirs.width(), theirs.height()), (w, h));
    }
}
