//! Meshes, cameras, poses and frame sequences, with their on-disk formats.

pub mod camera;
pub mod mesh;
pub mod sequence;

pub use camera::{
    load_camera, load_poses, nearest_rotation, orthonormality_error, parse_camera, parse_poses,
    poses_to_text, PinholeCamera, RigidPose,
};
pub use mesh::{load_mesh, parse_obj, to_obj, write_mesh, Aabb, Mesh, Vertex};
pub use sequence::{frame_file_name, load_sequence, FrameRecord, SequenceReader, CAMERA_FILE, POSES_FILE};
