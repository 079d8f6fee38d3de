use drselect_core::corpusio::{ids_path, read_embeddings, write_embeddings, EmbeddingMatrix};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn write_then_read_is_identity(dim in 1usize..20, values in proptest::collection::vec(-1e6f32..1e6, 0..200)) {
        let n = values.len() / dim;
        let rows = values[..n * dim].to_vec();
        let ids = (0..n).map(|i| format!("id-{i}")).collect();
        let m = EmbeddingMatrix::new(ids, dim, rows).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.emb");
        write_embeddings(&m, &path).unwrap();
        prop_assert!(ids_path(&path).exists());
        let back = read_embeddings(&path).unwrap();
        prop_assert_eq!(&back, &m);
        let bytes = std::fs::read(&path).unwrap();
        prop_assert_eq!(bytes.len(), 24 + 4 * n * dim);
    }
}
