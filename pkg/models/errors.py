"""
异常类型定义

所有业务异常都继承 VLError，CLI 层按类型映射退出码（见 handlers/error_handler.py）。
"""


class VLError(Exception):
    """本项目所有异常的基类"""


class ContractViolation(VLError, ValueError):
    """前置条件不满足（维度不匹配、非法取值等）"""


class CapabilityError(VLError):
    """超出穷举模式的能力范围（如 k! 过大、k^l 过大）"""


class TaskDefinitionError(VLError):
    """验证函数本身在执行时抛出异常"""


class ConfigurationError(VLError, ValueError):
    """配置错误（配置文件取值非法、验证函数与任务长度不一致等）"""


class InfeasibleTaskError(VLError, ValueError):
    """任务参数下不存在满足约束的样本"""


class ReplayMismatchError(VLError):
    """重放运行记录得到的指标与记录不一致"""
