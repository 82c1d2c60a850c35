"""Published results quoted next to our own runs, tagged "[cited]" when rendered.

These numbers come from external datasets and unreported seeds; they are
reading aids, not targets.
"""

CITED = {
    "exp1-period1": {
        "columns": ["RMSE", "MAPE"],
        "rows": [
            ("RF regression", {"RMSE": 321.61, "MAPE": 3.39}),
            ("Deep LSTM", {"RMSE": 330.26, "MAPE": 3.57}),
            ("Deep LSTM + Attention", {"RMSE": 283.83, "MAPE": 2.97}),
            ("NN-Baseline", {"RMSE": 287.47, "MAPE": 2.97}),
            ("FIN-ENN", {"RMSE": 277.45, "MAPE": 2.87}),
        ],
    },
    "exp1-period2": {
        "columns": ["RMSE", "MAPE"],
        "rows": [
            ("RF regression", {"RMSE": 2096.24, "MAPE": 3.29}),
            ("Deep LSTM", {"RMSE": 3045.87, "MAPE": 4.68}),
            ("Deep LSTM + Attention", {"RMSE": 2014.43, "MAPE": 2.96}),
            ("NN-Baseline", {"RMSE": 2127.70, "MAPE": 3.18}),
            ("FIN-ENN", {"RMSE": 2001.45, "MAPE": 2.96}),
        ],
    },
    "exp2": {
        "columns": ["Accuracy"],
        "rows": [
            ("Acoustic CNN (1D), emo_large", {"Accuracy": 66.12}),
            ("NN-Baseline, w2v2-persian-v3", {"Accuracy": 69.40}),
            ("FIN-ENN, w2v2-persian-v3", {"Accuracy": 72.23}),
            ("NN-Baseline, w2v2-persian-ser", {"Accuracy": 94.87}),
            ("FIN-ENN, w2v2-persian-ser", {"Accuracy": 95.51}),
        ],
    },
    "exp3": {
        "columns": ["Accuracy", "Specificity", "Sensitivity"],
        "rows": [
            ("K-NN (raw)", {"Accuracy": 35.00, "Specificity": 35.00, "Sensitivity": 35.00}),
            ("SVM (raw)", {"Accuracy": 32.50, "Specificity": 31.57, "Sensitivity": 33.33}),
            ("LDA (raw)", {"Accuracy": 42.50, "Specificity": 42.85, "Sensitivity": 42.10}),
            ("K-NN (NCA)", {"Accuracy": 55.00, "Specificity": 54.54, "Sensitivity": 55.55}),
            ("SVM (NCA)", {"Accuracy": 55.00, "Specificity": 60.00, "Sensitivity": 54.17}),
            ("LDA (NCA)", {"Accuracy": 55.00, "Specificity": 56.25, "Sensitivity": 55.00}),
            ("NN-Baseline (raw)", {"Accuracy": 57.50, "Specificity": 55.00, "Sensitivity": 60.00}),
            ("FIN-ENN (raw)", {"Accuracy": 62.50, "Specificity": 65.00, "Sensitivity": 60.00}),
        ],
    },
}

# Date ranges of the two market regimes used for the price-forecasting data.
PERIODS = {
    "period1": ("2015-03-01", "2018-09-30"),
    "period2": ("2018-10-01", "2022-04-30"),
    "all": (None, None),
}

DEFAULT_PRICE_FEATURES = ("Open", "High", "Low", "Close", "ETH", "N225")
