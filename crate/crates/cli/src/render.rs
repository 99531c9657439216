use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use rfscene_core::dataset::{draw_boxes, render_scene, Colormap, DatasetManifest, RenderConfig, SceneSidecar};
use rfscene_core::spectro::StftConfig;

use crate::{parse_image_size, say, CliError, CliResult};

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    /// Scene sidecar (`truth/<split>/scene_NNNNNN.json`).
    #[arg(long)]
    pub sidecar: PathBuf,
    /// Output PNG path.
    #[arg(long)]
    pub out: PathBuf,
    /// Overlay the ground-truth boxes.
    #[arg(long)]
    pub annotate: bool,
    /// Dataset manifest for STFT and image settings. Defaults to the
    /// `manifest.json` three levels above the sidecar, when present.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Square size `N` or `WxH`.
    #[arg(long, value_parser = parse_image_size)]
    pub image_size: Option<(u32, u32)>,
    /// Displayed dynamic range below the image maximum, dB.
    #[arg(long)]
    pub dynamic_range_db: Option<f64>,
    /// viridis or gray.
    #[arg(long)]
    pub colormap: Option<Colormap>,
}

fn sibling_manifest(sidecar: &Path) -> Option<PathBuf> {
    let root = sidecar.parent()?.parent()?.parent()?;
    let m = root.join("manifest.json");
    m.is_file().then_some(m)
}

pub fn cmd_render(args: &RenderArgs, out: &mut dyn Write) -> CliResult<()> {
    let manifest_path = args.manifest.clone().or_else(|| sibling_manifest(&args.sidecar));
    let (stft, mut render) = match manifest_path {
        Some(p) => {
            let m = DatasetManifest::read(&p)?;
            let render = RenderConfig {
                width: m.image_width,
                height: m.image_height,
                dynamic_range_db: m.dynamic_range_db,
                colormap: m.colormap.parse()?,
            };
            (m.stft, render)
        }
        None => (StftConfig::default(), RenderConfig::default()),
    };
    if let Some((w, h)) = args.image_size {
        render.width = w;
        render.height = h;
    }
    if let Some(d) = args.dynamic_range_db {
        render.dynamic_range_db = d;
    }
    if let Some(c) = args.colormap {
        render.colormap = c;
    }
    render.validate()?;

    let sidecar = SceneSidecar::read(&args.sidecar)?;
    let scene = sidecar.to_scene();
    scene.config.validate()?;
    let (mut img, boxes) = render_scene(&scene, &stft, &render)?;
    if args.annotate {
        draw_boxes(&mut img, &boxes);
    }
    img.save_with_format(&args.out, image::ImageFormat::Png)
        .map_err(|e| CliError::Core(e.into()))?;
    say(
        out,
        format!(
            "wrote {} ({}x{}, {} boxes)",
            args.out.display(),
            img.width(),
            img.height(),
            boxes.len()
        ),
    )
}
