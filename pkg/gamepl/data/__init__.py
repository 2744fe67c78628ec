from .dataset import PartialDataset, save_dataset, load_dataset
from .synthetic import SyntheticSpec, gen_synthetic
from .masking import (mask_fspl, mask_sspl, mask_full, mask_single_pos_neg,
                      apply_setting, parse_setting)
