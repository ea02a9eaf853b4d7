//! Synthetic meshes, textures and rendered scenes used as test oracles and
//! demo data.

pub mod primitives;
pub mod scene;
pub mod texture;

pub use scene::{
    default_camera, generate_synthetic_scene, orbit_poses, render_instance_scene, render_objects, render_sequence,
    write_instance_scene, InstanceScene, InstanceSceneSpec, Photometric, Primitive, SceneSummary, SequenceSpec,
    SyntheticSequence, TextureSpec,
};
