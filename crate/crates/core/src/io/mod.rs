//! Persistent formats: dataset containers and CSV reports. WAV lives in [`crate::scene::wav`].

pub mod container;
pub mod report_csv;

pub use container::{
    decode_dataset, encode_dataset, encode_dataset_with, load_dataset, load_filterbank, load_hrtf, load_steering, read_manifest,
    save_dataset, save_dataset_with, Dataset, Kind, Manifest,
};
pub use report_csv::{export_report_csv, import_report_csv, report_paths};
