# number of points in every posed agent cloud
AGENT_POINTS = 3000

# default voxel edge length in meters (0.25 cm)
VOXEL_SIZE = 0.0025

# arm elevation grid: [-90, 89.5] in steps of 0.5 degrees
ELEVATION_MIN = -90.0
ELEVATION_STEP = 0.5
N_ELEVATIONS = 360

# pointing sides, in pool index order
SIDES = ("left", "right")

# pose perturbation bounds in degrees
PERTURB_RANGE = 3.0
PERTURB_SIGMA = 1.5
PERTURB_SEGMENTS = ("upper_arm", "lower_arm", "hand", "head")

# placement fluctuation of the arm elevation in degrees
FLUCTUATION = 5.0

# fluctuation draws per pointing solve before giving up
POINTING_RETRIES = 50

# worst-case angle between the gesture ray and the eye -> target center
# direction: fluctuation + perturbation + quantization
MAX_POINTING_ERROR = FLUCTUATION + PERTURB_RANGE + ELEVATION_STEP

# per-point source tags of a composed scene
SOURCE_SCENE = 0
SOURCE_AGENT = 1

# IoU thresholds of the accuracy metric
IOU_THRESHOLDS = (0.25, 0.5)

# evaluation subsets
UNIQUE = "unique"
MULTIPLE = "multiple"
OVERALL = "overall"

# grounding modes
MODE_GESTURE = "gesture"
MODE_LANG = "lang"
MODE_FULL = "full"
MODE_FUSION = "fusion"

# binary file magics
ERUPC_MAGIC = b"ERUPC\x00"
POOL_MAGIC = b"ERUPOOL1"
CHECKPOINT_MAGIC = b"ERUNET1"

# attribute lexicon categories
LEXICON_CATEGORIES = ("spatial", "color", "shape", "size")
