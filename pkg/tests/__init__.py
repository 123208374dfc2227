"""
验证学习测试套件
"""
