mod support;

use attrikit::labels::{dataset_to_coco_string, load_coco, save_coco};
use support::oracle::random_dataset;

#[test]
fn save_load_save_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..50 {
        let ds = random_dataset(seed);
        let first = dir.path().join(format!("{seed}-a.json"));
        let second = dir.path().join(format!("{seed}-b.json"));
        save_coco(&ds, &first).unwrap();
        let loaded = load_coco(&first).unwrap();
        save_coco(&loaded, &second).unwrap();
        let (a, b) = (std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
        assert_eq!(a, b, "seed {seed}");
        assert_eq!(loaded.images.len(), ds.images.len());
        assert_eq!(
            dataset_to_coco_string(&load_coco(&second).unwrap())
                .unwrap()
                .into_bytes(),
            b
        );
    }
}
