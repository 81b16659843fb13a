import os
from fractions import Fraction

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()


class Settings(BaseSettings):
    """
    Application settings loaded from environment variables.
    """

    # Longest word length for which 2^n cylinder sweeps are allowed
    depth_budget: int = int(os.getenv("CANTOR_BAYES_DEPTH_BUDGET", "24"))
    # Count-aggregated total variation runs in O(n), so it gets its own, larger limit
    exchangeable_depth_limit: int = int(
        os.getenv("CANTOR_BAYES_EXCHANGEABLE_DEPTH_LIMIT", "4096")
    )
    sample_length_limit: int = int(
        os.getenv("CANTOR_BAYES_SAMPLE_LENGTH_LIMIT", str(2**20))
    )
    # Parameter words whose Beta integral tables a joint keeps
    beta_table_cache_size: int = int(
        os.getenv("CANTOR_BAYES_BETA_TABLE_CACHE_SIZE", "1024")
    )

    # Rationals are kept as "p/q" strings and parsed on access
    epsilon: str = os.getenv("CANTOR_BAYES_EPSILON", "1/100")
    recovery_threshold: str = os.getenv("CANTOR_BAYES_RECOVERY_THRESHOLD", "9/10")

    decimal_digits: int = int(os.getenv("CANTOR_BAYES_DECIMAL_DIGITS", "12"))
    log_level: str = os.getenv("CANTOR_BAYES_LOG_LEVEL", "INFO")

    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", extra="ignore"
    )

    @property
    def epsilon_value(self) -> Fraction:
        """
        Parse the singularity tolerance.

        Returns:
            Fraction: The configured epsilon.
        """
        return Fraction(self.epsilon)

    @property
    def recovery_threshold_value(self) -> Fraction:
        """
        Parse the minimum recovery rate required for a consistent verdict.

        Returns:
            Fraction: The configured threshold.
        """
        return Fraction(self.recovery_threshold)


settings = Settings()
