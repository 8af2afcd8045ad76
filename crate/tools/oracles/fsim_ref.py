"""Reference FSIM / SSIM / PSNR oracles used to freeze expected values.

FSIM is a line-by-line numpy transcription of the reference MATLAB
FeatureSIM.m and phasecong2.m, luminance only.
SSIM comes from scikit-image with Gaussian weighting (sigma 1.5).
"""
import numpy as np
from skimage.metrics import structural_similarity


def luma(img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img
    return 0.299 * img[:, :, 0] + 0.587 * img[:, :, 1] + 0.114 * img[:, :, 2]


def conv2_same(a, k):
    """MATLAB conv2(a, k, 'same') with zero padding."""
    from scipy.signal import convolve2d

    full = convolve2d(a, k, mode="full")
    r0 = k.shape[0] // 2
    c0 = k.shape[1] // 2
    return full[r0 : r0 + a.shape[0], c0 : c0 + a.shape[1]]


def _ranges(n):
    if n % 2:
        return np.arange(-(n - 1) / 2, (n - 1) / 2 + 1) / (n - 1)
    return np.arange(-n / 2, n / 2) / n


def lowpassfilter(rows, cols, cutoff, n):
    x, y = np.meshgrid(_ranges(cols), _ranges(rows))
    radius = np.sqrt(x**2 + y**2)
    return np.fft.ifftshift(1.0 / (1.0 + (radius / cutoff) ** (2 * n)))


def phasecong2(im):
    nscale = 4
    norient = 4
    min_wave_length = 6
    mult = 2
    sigma_onf = 0.55
    d_theta_on_sigma = 1.2
    k = 2.0
    epsilon = 0.0001
    theta_sigma = np.pi / norient / d_theta_on_sigma

    rows, cols = im.shape
    imagefft = np.fft.fft2(im)
    x, y = np.meshgrid(_ranges(cols), _ranges(rows))
    radius = np.sqrt(x**2 + y**2)
    theta = np.arctan2(-y, x)
    radius = np.fft.ifftshift(radius)
    theta = np.fft.ifftshift(theta)
    radius[0, 0] = 1
    sintheta = np.sin(theta)
    costheta = np.cos(theta)

    lp = lowpassfilter(rows, cols, 0.45, 15)
    log_gabor = []
    for s in range(nscale):
        wavelength = min_wave_length * mult**s
        fo = 1.0 / wavelength
        lg = np.exp(-(np.log(radius / fo) ** 2) / (2 * np.log(sigma_onf) ** 2))
        lg = lg * lp
        lg[0, 0] = 0
        log_gabor.append(lg)

    spread = []
    for o in range(norient):
        angl = o * np.pi / norient
        ds = sintheta * np.cos(angl) - costheta * np.sin(angl)
        dc = costheta * np.cos(angl) + sintheta * np.sin(angl)
        dtheta = np.abs(np.arctan2(ds, dc))
        spread.append(np.exp(-(dtheta**2) / (2 * theta_sigma**2)))

    energy_all = np.zeros((rows, cols))
    an_all = np.zeros((rows, cols))
    for o in range(norient):
        sum_e = np.zeros((rows, cols))
        sum_o = np.zeros((rows, cols))
        sum_an = np.zeros((rows, cols))
        energy = np.zeros((rows, cols))
        eo = []
        ifft_filters = []
        for s in range(nscale):
            filt = log_gabor[s] * spread[o]
            ifft_filters.append(np.real(np.fft.ifft2(filt)) * np.sqrt(rows * cols))
            resp = np.fft.ifft2(imagefft * filt)
            eo.append(resp)
            an = np.abs(resp)
            sum_an += an
            sum_e += np.real(resp)
            sum_o += np.imag(resp)
            if s == 0:
                em_n = np.sum(filt**2)
        x_energy = np.sqrt(sum_e**2 + sum_o**2) + epsilon
        mean_e = sum_e / x_energy
        mean_o = sum_o / x_energy
        for s in range(nscale):
            e = np.real(eo[s])
            od = np.imag(eo[s])
            energy += e * mean_e + od * mean_o - np.abs(e * mean_o - od * mean_e)

        median_e2n = np.median((np.abs(eo[0]) ** 2).ravel())
        mean_e2n = -median_e2n / np.log(0.5)
        noise_power = mean_e2n / em_n

        est_sum_an2 = np.zeros((rows, cols))
        for s in range(nscale):
            est_sum_an2 += ifft_filters[s] ** 2
        est_sum_aiaj = np.zeros((rows, cols))
        for si in range(nscale - 1):
            for sj in range(si + 1, nscale):
                est_sum_aiaj += ifft_filters[si] * ifft_filters[sj]
        est_noise_energy2 = 2 * noise_power * np.sum(est_sum_an2) + 4 * noise_power * np.sum(est_sum_aiaj)
        tau = np.sqrt(est_noise_energy2 / 2)
        est_noise_energy = tau * np.sqrt(np.pi / 2)
        est_noise_energy_sigma = np.sqrt((2 - np.pi / 2) * tau**2)
        t = (est_noise_energy + k * est_noise_energy_sigma) / 1.7
        energy = np.maximum(energy - t, 0)
        energy_all += energy
        an_all += sum_an
    return energy_all / an_all


def fsim(ref, dis):
    y1 = luma(ref)
    y2 = luma(dis)
    rows, cols = y1.shape
    f = max(1, int(np.floor(min(rows, cols) / 256 + 0.5)))
    ave = np.ones((f, f)) / (f * f)
    y1 = conv2_same(y1, ave)[::f, ::f]
    y2 = conv2_same(y2, ave)[::f, ::f]
    pc1 = phasecong2(y1)
    pc2 = phasecong2(y2)
    dx = np.array([[3, 0, -3], [10, 0, -10], [3, 0, -3]]) / 16
    dy = np.array([[3, 10, 3], [0, 0, 0], [-3, -10, -3]]) / 16
    g1 = np.sqrt(conv2_same(y1, dx) ** 2 + conv2_same(y1, dy) ** 2)
    g2 = np.sqrt(conv2_same(y2, dx) ** 2 + conv2_same(y2, dy) ** 2)
    t1 = 0.85
    t2 = 160
    pc_sim = (2 * pc1 * pc2 + t1) / (pc1**2 + pc2**2 + t1)
    g_sim = (2 * g1 * g2 + t2) / (g1**2 + g2**2 + t2)
    pcm = np.maximum(pc1, pc2)
    return float(np.sum(g_sim * pc_sim * pcm) / np.sum(pcm))


def ssim(ref, dis):
    return float(
        structural_similarity(
            luma(ref),
            luma(dis),
            gaussian_weights=True,
            sigma=1.5,
            use_sample_covariance=False,
            data_range=255,
        )
    )


def psnr(ref, dis):
    mse = np.mean((luma(ref) - luma(dis)) ** 2)
    if mse == 0:
        return float("inf")
    return float(10 * np.log10(255.0**2 / mse))
