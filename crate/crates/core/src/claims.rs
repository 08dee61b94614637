//! The inequality each check tests, as a one-line statement.

pub const CONV_ORACLE: &str = "FFT and direct convolution agree";
pub const UNIT_MASS: &str = "sum h^d phi_t = 1 and M_phi 1 = 1";
pub const KINNUNEN: &str = "|d_j M_phi f(x)| <= M_phi(d_j f)(x)";
pub const THEOREM1: &str = "||M_phi f||_Hdot1p <= C ||f||_Hdot1p";
pub const LOCAL_THEOREM: &str = "||m_phi f||_hdot1p <= C ||f||_hdot1p";
pub const COROLLARY1: &str = "||grad M_phi f||_1 <= C ||f||_Hdot11";
pub const MODULUS_COMPARISON: &str = "||d_j |f| ||_Hp <= C ||d_j f||_Hp";
pub const SHARPNESS: &str = "|d_j M_phi f(x)| ~ |x|^-(d+1) for f with vanishing moments";
pub const WEAK_EMBEDDING: &str = "||h||_L1(E) <= r' |E|^(1-1/r) ||1_E h||_(r,inf)";
pub const NORM_EQUIVALENCE: &str = "||M~_P f||_p ~ ||M~_phi f||_p";
pub const MIYACHI: &str = "||N_p f||_p ~ ||f||_Hdot1p";
pub const LERNER_PEREZ: &str =
    "|B|^(-1/r) ||1_B(f-f_B)||_(r,inf) <= C |B|^(1/d) (avg_2B |N_p f|^q)^(1/q)";
pub const NP_EXACT: &str = "N_1 x = 1 and N_1 step = 1 near the origin";
pub const E1_E2: &str =
    "int_E1 (M f - c)+ <~ t^(d+1) M_q(N_p f)(x); int_E2 (M f - c)+ <~ t^(d+1) M~4(grad f)(x)";
pub const DYADIC_ENVELOPE: &str = "phi(x) <= C sum_k 2^-k |B(0,2^k)|^-1 1_B(0,2^k)(x)";
