CHECKPOINT_MAGIC = b"PGAN"
CHECKPOINT_VERSION = 1
CHECKPOINT_SUFFIX = ".pgan"

LOSS_CSV_HEADER = ("step", "d_loss", "g_gan", "g_id")
SSIM_CSV_HEADER = ("file", "ssim")
MANIFEST_CSV_HEADER = ("split", "stage", "seed", "roles")

REAL_LABEL = 1.0
FAKE_LABEL = 0.0

# Child stream keys for RngState.split.
RNG_KEY_GENERATOR = 1
RNG_KEY_DISCRIMINATOR = 2
RNG_KEY_BUFFER = 3
RNG_KEY_ORDER = 4
RNG_KEY_DATA = 5

STAGE_CONDITION_ROLES: dict[int, tuple[str, ...]] = {
    1: ("skeleton", "garment"),
    2: ("body", "skeleton", "garment"),
    3: ("stitched", "diffmask"),
}
STAGE_CONDITION_CHANNELS: dict[int, tuple[int, ...]] = {
    1: (3, 3),
    2: (3, 3, 3),
    3: (3, 1),
}

# Stage 4 is the full pipeline; its dataset carries the raw pipeline inputs.
PIPELINE_INPUT_ROLES = ("skeleton", "garment", "body")

DATASET_SPLITS = ("train", "test")
MANIFEST_FILE = "manifest.csv"
LOSS_CSV_FILE = "losses.csv"
