"""Built-in experiment presets for the reference experiments."""

EIGHT_FOUR = {"weight": {"format": "fixed", "word_bits": 8, "frac_bits": 4}}

PRESETS = {
    "gaussian-paper": {
        "name": "gaussian-paper",
        "seeds": [0, 1, 2, 3, 4],
        "metrics": ["mean", "var", "w2"],
        "log_every": 10_000,
        "output_dir": "runs/gaussian-paper",
        "target": {"kind": "gaussian", "dim": 1},
        "precision": EIGHT_FOUR,
        "defaults": {"eta": 0.09, "u": 2.0, "gamma": 3.0,
                     "iterations": 100_000, "burn_in": 10_000, "thinning": 10},
        "samplers": [{"kind": "sghmc"}, {"kind": "sghmc_lpf"},
                     {"kind": "sghmc_lpl"}, {"kind": "sghmc_vc"}],
    },
    "mixture-paper": {
        "name": "mixture-paper",
        "seeds": [0, 1, 2, 3, 4],
        "metrics": ["mean", "var", "l2", "w2"],
        "log_every": 5_000,
        "output_dir": "runs/mixture-paper",
        "target": {"kind": "mixture"},
        "precision": EIGHT_FOUR,
        "defaults": {"eta": 0.1, "u": 1.0, "gamma": 3.0,
                     "iterations": 100_000, "burn_in": 1_000, "thinning": 10},
        "samplers": [{"kind": "sghmc_lpl"}, {"kind": "sghmc_vc"}, {"kind": "sghmc_lpf"},
                     {"kind": "sgld_lpl"}, {"kind": "sgld_vc"}, {"kind": "sgld_lpf"}],
    },
    "gaussian-vc-ratio": {
        "name": "gaussian-vc-ratio",
        "seeds": [0, 1, 2, 3, 4],
        "metrics": ["var", "w2"],
        "log_every": 100_000,
        "output_dir": "runs/gaussian-vc-ratio",
        "target": {"kind": "gaussian", "dim": 1},
        "precision": EIGHT_FOUR,
        "defaults": {"u": 2.0, "gamma": 3.0,
                     "iterations": 500_000, "burn_in": 50_000, "thinning": 10},
        "samplers": [{"kind": "sghmc_lpl"}, {"kind": "sghmc_vc"}],
        "sweep": {"var_ratio": [0.5, 1.0, 3.0, 10.0, 100.0]},
    },
    "mnist-logistic-paper": {
        "name": "mnist-logistic-paper",
        "seeds": [0],
        "metrics": ["nll"],
        "log_every": 500,
        "output_dir": "runs/mnist-logistic-paper",
        "save_state": False,
        "target": {"kind": "logistic",
                   "images": "data/mnist/train-images-idx3-ubyte",
                   "labels": "data/mnist/train-labels-idx1-ubyte",
                   "prior_variance": 1e-2, "batch_size": 100},
        "precision": EIGHT_FOUR,
        "defaults": {"eta": 0.01, "u": 2.0, "gamma": 2.0,
                     "iterations": 5_000, "burn_in": 0, "thinning": 50},
        "samplers": [{"kind": "sgld_lpf"}, {"kind": "sgld_lpl"}, {"kind": "sgld_vc"},
                     {"kind": "sghmc_lpf"}, {"kind": "sghmc_lpl"}, {"kind": "sghmc_vc"}],
    },
}

DESCRIPTIONS = {
    "gaussian-paper": "standard normal, 8-bit/4-frac, eta=0.09 u=2 gamma=3: SGHMC variants",
    "mixture-paper": "two-mode mixture, 8-bit/4-frac, eta=0.1 u=1 gamma=3: SGHMC and SGLD variants",
    "gaussian-vc-ratio": "standard normal, eta swept so Var_x/(delta^2/4) in {0.5..100}: VC vs naive LP-L",
    "mnist-logistic-paper": "softmax regression on MNIST IDX files, prior N(0, 1e-2), eta=0.01 u=2 gamma=2",
}
