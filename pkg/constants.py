# Constants used across the toolkit

# Two-sided 95% normal quantile and the significance level used by every test
Z_975 = 1.959964
ALPHA = 0.05

# Simulated trials live on [0, 1]; estimation studies integrate up to this horizon
STUDY_HORIZON = 1.0

# Dropout probability per follow-up exam; the final exam is missed twice as often
# name: rate for exams 1..K-1
DROPOUT_RATES = {"None": 0.0, "Low": 0.1, "Medium": 0.2, "High": 0.3}

# Estimation strategies for interval-censored data
METHOD_MIDPOINT_KM = "midpoint-km"
METHOD_RIGHTPOINT_KM = "rightpoint-km"
METHOD_TURNBULL = "turnbull"
ESTIMATION_METHODS = (METHOD_MIDPOINT_KM, METHOD_RIGHTPOINT_KM, METHOD_TURNBULL)

# Two-sample test tags as written in configs and on the command line
TEST_RMST = "rmst"
TEST_WMST = "wmst"
TEST_LOGRANK = "logrank"
TEST_FH = "fh"

# Default study settings: Weibull(1, 1), Medium dropout, n=100, K=5, p_exact=0
DEFAULT_N = 100
DEFAULT_K = 5
DEFAULT_DROPOUT = "Medium"
DEFAULT_P_EXACT = 0.0
DEFAULT_ESTIMATION_SCENARIO = "weibull-1-1"
