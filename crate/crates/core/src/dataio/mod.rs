//! Dataset ingestion and model persistence.

mod model_file;
mod table;

pub use model_file::{load_model, model_from_str, model_to_string, save_model, FORMAT_VERSION, MAGIC};
pub use table::{
    load_csv, load_features, load_labels, write_dataset, write_labels, DatasetSchema,
};
