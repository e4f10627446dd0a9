//! Synthetic phantoms, limited-angle acquisition simulation and the dataset
//! container.

mod acquisition;
mod dataset;
mod phantom;

pub use acquisition::{
    crop_theta, full_sinogram, pad_theta_circular, simulate_acquisition, Acquisition,
    AcquisitionProtocol,
};
pub use dataset::{
    manifest_path, read_dataset, read_dataset_from, write_dataset, write_dataset_to, DatasetRecord,
    Manifest, ManifestEntry, DATASET_MAGIC, DATASET_VERSION,
};
pub use phantom::{generate_phantom, pixel_coord, Ellipse, Phantom, PhantomKind, SHEPP_LOGAN};
