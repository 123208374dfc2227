"""
模型模块
"""